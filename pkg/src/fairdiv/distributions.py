"""Item-value distributions on [0, 1] with bounded densities.

Each distribution declares the bounds alpha = min density and beta = max
density over [0, 1]; both are computed at construction and verified by tests.
Sampling is inverse-transform throughout: every draw consumes exactly one
uniform, so seeded runs can be replayed draw for draw.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import erf

from .rng import RngStream

_SQRT2 = math.sqrt(2.0)


def _phi(t):
    """Standard normal CDF; works on scalars and arrays (one erf everywhere)."""
    return 0.5 * (1.0 + erf(t / _SQRT2))


class Distribution:
    """Base: a density on [0, 1] with 0 < alpha <= pdf <= beta."""

    kind: str
    alpha: float
    beta: float

    def pdf(self, x: float) -> float:
        if not 0.0 <= x <= 1.0:
            raise ValueError(f"pdf domain is [0, 1], got {x!r}")
        return float(self._pdf(np.asarray(x, dtype=np.float64)))

    def cdf(self, x: float) -> float:
        if not 0.0 <= x <= 1.0:
            raise ValueError(f"cdf domain is [0, 1], got {x!r}")
        return float(self._cdf(np.asarray(x, dtype=np.float64)))

    def quantile(self, p: float) -> float:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"quantile domain is [0, 1], got {p!r}")
        return float(self._quantile(np.array([p], dtype=np.float64))[0])

    def mean(self) -> float:
        raise NotImplementedError

    # array versions, no domain checks; used by samplers and tests
    def _pdf(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _cdf(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _quantile(self, p: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __repr__(self) -> str:  # pragma: no cover
        return self.spec_string()

    def spec_string(self) -> str:
        raise NotImplementedError


class Uniform(Distribution):
    kind = "uniform"
    alpha = 1.0
    beta = 1.0

    def mean(self) -> float:
        return 0.5

    def _pdf(self, x):
        return np.ones_like(x, dtype=np.float64)

    def _cdf(self, x):
        return np.asarray(x, dtype=np.float64)

    def _quantile(self, p):
        return np.asarray(p, dtype=np.float64)

    def spec_string(self) -> str:
        return "uniform"


class TruncatedNormal(Distribution):
    """Normal(mu, sigma) conditioned on [0, 1]."""

    kind = "truncnorm"

    def __init__(self, mu: float, sigma: float):
        if sigma <= 0:
            raise ValueError("sigma must be positive")
        self.mu = float(mu)
        self.sigma = float(sigma)
        self._lo_z = float(_phi((0.0 - self.mu) / self.sigma))
        self._mass = float(_phi((1.0 - self.mu) / self.sigma)) - self._lo_z
        if self._mass <= 0:
            raise ValueError("no mass on [0, 1] for these parameters")
        # density is unimodal: max at the clamped mode, min at the far endpoint
        self.beta = self.pdf(min(max(self.mu, 0.0), 1.0))
        self.alpha = min(self.pdf(0.0), self.pdf(1.0))
        if self.alpha <= 0.0:
            raise ValueError("density underflows to 0 inside [0, 1]")

    def mean(self) -> float:
        a = (0.0 - self.mu) / self.sigma
        b = (1.0 - self.mu) / self.sigma
        dens_a = math.exp(-0.5 * a * a) / math.sqrt(2.0 * math.pi)
        dens_b = math.exp(-0.5 * b * b) / math.sqrt(2.0 * math.pi)
        return self.mu + self.sigma * (dens_a - dens_b) / self._mass

    def _pdf(self, x):
        t = (np.asarray(x, dtype=np.float64) - self.mu) / self.sigma
        return np.exp(-0.5 * t * t) / (math.sqrt(2.0 * math.pi) * self.sigma * self._mass)

    def _cdf(self, x):
        t = (np.asarray(x, dtype=np.float64) - self.mu) / self.sigma
        return (_phi(t) - self._lo_z) / self._mass

    def _quantile(self, p):
        # bisection on the cdf to x-tolerance 1e-12
        p = np.asarray(p, dtype=np.float64)
        lo = np.zeros_like(p)
        hi = np.ones_like(p)
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            below = self._cdf(mid) < p
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
            if float(np.max(hi - lo)) <= 1e-12:
                break
        return 0.5 * (lo + hi)

    def spec_string(self) -> str:
        return f"truncnorm:{self.mu:g},{self.sigma:g}"


class PiecewiseLinear(Distribution):
    """Density linear between knots (x_0=0, ..., x_k=1), strictly positive.

    The total mass must already be 1 (trapezoid rule, tolerance 1e-9); knots
    are not renormalized.
    """

    kind = "pwl"

    def __init__(self, knots: list[tuple[float, float]]):
        if len(knots) < 2:
            raise ValueError("need at least two knots")
        xs = np.array([k[0] for k in knots], dtype=np.float64)
        ds = np.array([k[1] for k in knots], dtype=np.float64)
        if xs[0] != 0.0 or xs[-1] != 1.0:
            raise ValueError("knots must start at x=0 and end at x=1")
        if np.any(np.diff(xs) <= 0):
            raise ValueError("knot positions must be strictly increasing")
        if np.any(ds <= 0):
            raise ValueError("knot densities must be strictly positive")
        total = float(np.sum(0.5 * (ds[1:] + ds[:-1]) * np.diff(xs)))
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"density integrates to {total!r}, expected 1")
        self.xs = xs
        self.ds = ds
        # cumulative mass at each knot; clamp the final value to exactly 1
        cum = np.concatenate(([0.0], np.cumsum(0.5 * (ds[1:] + ds[:-1]) * np.diff(xs))))
        cum[-1] = 1.0
        self.cum = cum
        self.alpha = float(ds.min())
        self.beta = float(ds.max())

    def mean(self) -> float:
        # Simpson with 1e4 panels; integrand is piecewise quadratic so the
        # only error comes from panels straddling knots
        panels = 10_000
        grid = np.linspace(0.0, 1.0, panels + 1)
        vals = grid * self._pdf(grid)
        h = 1.0 / panels
        return float(h / 3.0 * (vals[0] + vals[-1] + 4.0 * vals[1:-1:2].sum() + 2.0 * vals[2:-1:2].sum()))

    def _segment(self, x):
        # index of the segment containing x, in [0, nseg-1]
        return np.clip(np.searchsorted(self.xs, x, side="right") - 1, 0, len(self.xs) - 2)

    def _pdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        s = self._segment(x)
        x0, x1 = self.xs[s], self.xs[s + 1]
        d0, d1 = self.ds[s], self.ds[s + 1]
        return d0 + (d1 - d0) * (x - x0) / (x1 - x0)

    def _cdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        s = self._segment(x)
        x0, x1 = self.xs[s], self.xs[s + 1]
        d0, d1 = self.ds[s], self.ds[s + 1]
        w = x - x0
        slope = (d1 - d0) / (x1 - x0)
        return self.cum[s] + d0 * w + 0.5 * slope * w * w

    def _quantile(self, p):
        p = np.asarray(p, dtype=np.float64)
        s = np.clip(np.searchsorted(self.cum, p, side="right") - 1, 0, len(self.xs) - 2)
        x0, x1 = self.xs[s], self.xs[s + 1]
        d0, d1 = self.ds[s], self.ds[s + 1]
        slope = (d1 - d0) / (x1 - x0)
        rest = p - self.cum[s]
        # solve 0.5*slope*w^2 + d0*w = rest for w >= 0; the product form stays
        # stable as slope -> 0
        disc = np.sqrt(d0 * d0 + 2.0 * slope * rest)
        w = 2.0 * rest / (d0 + disc)
        return np.minimum(x0 + w, x1)

    def spec_string(self) -> str:
        parts = ";".join(f"{x:g},{d:g}" for x, d in zip(self.xs, self.ds))
        return f"pwl:{parts}"


def parse_distribution(text: str) -> Distribution:
    """Parse a spec string: `uniform`, `truncnorm:<mu>,<sigma>`, or
    `pwl:<x0>,<d0>;<x1>,<d1>;...`."""
    text = text.strip()
    if text == "uniform":
        return Uniform()
    if text.startswith("truncnorm:"):
        body = text[len("truncnorm:"):]
        try:
            mu_s, sigma_s = body.split(",")
            return TruncatedNormal(float(mu_s), float(sigma_s))
        except ValueError as exc:
            raise ValueError(f"bad truncnorm spec {text!r}: {exc}") from None
    if text.startswith("pwl:"):
        body = text[len("pwl:"):]
        try:
            knots = []
            for part in body.split(";"):
                x_s, d_s = part.split(",")
                knots.append((float(x_s), float(d_s)))
            return PiecewiseLinear(knots)
        except ValueError as exc:
            raise ValueError(f"bad pwl spec {text!r}: {exc}") from None
    raise ValueError(f"unknown distribution spec {text!r}")


def mean_and_bounds(dist: Distribution) -> tuple[float, float, float]:
    """(mean, alpha, beta) of a distribution in one call."""
    return dist.mean(), dist.alpha, dist.beta


def sample_conditional_max(dist: Distribution, k: int, cap: float, rng: RngStream) -> float:
    """One draw of max(X_1..X_k) where the X are i.i.d. dist conditioned on [0, cap].

    Consumes exactly one uniform U and returns quantile(cdf(cap) * U**(1/k)).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not 0.0 < cap <= 1.0:
        raise ValueError("cap must lie in (0, 1]")
    u = rng.random()
    return dist.quantile(dist.cdf(cap) * u ** (1.0 / k))


def conditional_max_cdf(dist: Distribution, k: int, cap: float, x) -> np.ndarray:
    """CDF of the law drawn by sample_conditional_max: (cdf(x)/cdf(cap))**k on [0, cap]."""
    x = np.asarray(x, dtype=np.float64)
    base = np.clip(dist._cdf(np.clip(x, 0.0, cap)) / dist.cdf(cap), 0.0, 1.0)
    return np.where(x >= cap, 1.0, base**k)
