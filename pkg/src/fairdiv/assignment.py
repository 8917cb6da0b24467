"""Envy-free assignment: greedy algorithm, its Markov abstraction, and the
fluid-limit ODE the abstraction tracks.

The greedy run and the simulated chain expose the same trajectory shape
(X_t = unassigned valid items, Y_t = assigned agents) so experiments can
compare them directly. The deterministic counterpart is z(s), the root of
2z - z*ln(2z) = 1 - s, against which scaled trajectories are measured.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels
from .model import Assignment, RankingProfile
from .rng import RngStream

S_STAR = 1.0 - 3.0 / (2.0 * math.e)
Z_STAR = 1.0 / (2.0 * math.e)
Y_STAR = 1.0 / (2.0 * math.e)


@dataclass(frozen=True)
class TrajectoryRecord:
    """Per-iteration counts (X_t, Y_t) of a greedy or simulated run.

    The exact integer identity 2*X_t + Y_t = 2m - t pins the recorded length
    to the iteration count; a free-running chain has T = 2m.
    """

    m: int
    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        X = np.ascontiguousarray(self.X, dtype=np.int64)
        Y = np.ascontiguousarray(self.Y, dtype=np.int64)
        if X.ndim != 1 or X.shape != Y.shape or X.size < 1:
            raise ValueError("X and Y must be equal-length nonempty vectors")
        if X[0] != self.m or Y[0] != 0:
            raise ValueError("trajectory must start at (m, 0)")
        if np.any(X < 0) or np.any(Y < 0):
            raise ValueError("counts must be nonnegative")
        if np.any(np.diff(X) > 0):
            raise ValueError("X must be nonincreasing")
        t = np.arange(X.size, dtype=np.int64)
        if np.any(2 * X + Y != 2 * self.m - t):
            raise ValueError("2*X_t + Y_t = 2m - t violated")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def T(self) -> int:
        return self.X.size - 1

    @property
    def complete(self) -> bool:
        return self.T == 2 * self.m

    def max_y(self) -> int:
        return int(self.Y.max())


def greedy_assignment(profile: RankingProfile):
    """Run the invalidation-greedy assignment on a strict ranking profile.

    Repeatedly the lowest-index unassigned agent claims her most preferred
    still-valid item; a contested item is invalidated and its holder released
    instead. Returns (Assignment, trace) on success and (None, trace) when
    the valid set empties first, which happens iff no envy-free assignment
    exists. The trace records (X_t, Y_t) after every iteration.
    """
    rankings = profile.rankings
    n = rankings.shape[0]
    psi, X, Y, success = _kernels.greedy_run(rankings)
    trace = TrajectoryRecord(rankings.shape[1], X, Y)
    assert bool(success) == (trace.max_y() >= n)
    if not success:
        return None, trace
    assignment = Assignment(tuple(int(j) for j in psi))
    return assignment, trace


def simulate_markov(m: int, rng: RngStream) -> TrajectoryRecord:
    """Free-running death chain: X drops by 1 w.p. X_t/(2m - t - X_t).

    Runs t = 0..2m-1 with one uniform per step; Y is recovered from the
    identity. Distributionally equivalent to the greedy run's trajectory on
    a uniform ranking profile, but O(m) with no profile materialized.
    """
    if m < 1:
        raise ValueError("need m >= 1")
    X = _kernels.markov_chain(rng._state, m)
    t = np.arange(X.size, dtype=np.int64)
    Y = 2 * m - t - 2 * X
    return TrajectoryRecord(m, X, Y)


def _g(z, s):
    return 2.0 * z - z * np.log(2.0 * z) - (1.0 - s)


def _bisect_z(s: np.ndarray) -> np.ndarray:
    # root of g on (0, 1/2]; g(0+) = -(1-s) < 0 <= s = g(1/2), g' >= 1
    lo = np.zeros_like(s)
    hi = np.full_like(s, 0.5)
    exact = _g(hi, s) == 0.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        neg = _g(mid, s) < 0.0
        lo = np.where(neg, mid, lo)
        hi = np.where(neg, hi, mid)
        if np.all(hi - lo <= 1e-12):
            break
    return np.where(exact, 0.5, hi)


def ode_z(s) -> float | np.ndarray:
    """Deterministic limit z(s): the root of 2z - z*ln(2z) = 1 - s.

    Accepts a scalar or an array in [0, 1); bisection to x-tolerance 1e-12,
    with z(0) = 0.5 returned exactly.
    """
    arr = np.asarray(s, dtype=np.float64)
    if np.any(arr < 0.0) or np.any(arr >= 1.0):
        raise ValueError("s must lie in [0, 1)")
    z = _bisect_z(arr.reshape(-1)).reshape(arr.shape)
    return float(z) if np.ndim(s) == 0 else z


def peak_stats() -> tuple[float, float, float]:
    """Closed-form peak of y(s) = z(s)*ln(1/(2 z(s))).

    Returns (s*, z*, y*) = (1 - 3/(2e), 1/(2e), 1/(2e)) after checking them
    against a 10^4-point grid maximum of the bisected solution.
    """
    s = np.linspace(0.0, 1.0, 10**4, endpoint=False)
    z = ode_z(s)
    with np.errstate(divide="ignore"):  # y(0) = 0.5*ln(1) = 0 is fine; guard s->1
        y = z * np.log(1.0 / (2.0 * z))
    top = float(y.max())
    if not (abs(top - Y_STAR) <= 1e-6 and top <= Y_STAR + 1e-12):
        raise AssertionError(f"grid maximum {top!r} disagrees with 1/(2e)")
    return S_STAR, Z_STAR, Y_STAR


@lru_cache(maxsize=8)
def _z_grid(m: int) -> np.ndarray:
    t = np.arange(2 * m, dtype=np.float64)
    return _bisect_z(t / (2.0 * m))


def trajectory_deviation(tr: TrajectoryRecord) -> float:
    """max over t = 0..2m-1 of |X_t - 2m*z(t/2m)| / m for a complete run."""
    if not tr.complete:
        raise ValueError("trajectory must be complete (T = 2m)")
    m = tr.m
    z = _z_grid(m)
    return float(np.max(np.abs(tr.X[:-1] - 2.0 * m * z)) / m)
