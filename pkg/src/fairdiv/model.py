"""Problem instances, allocations, and fairness predicates.

Utilities are additive: an agent's value for a bundle is the sum of her values
for its items. Allocations may be partial; proportionality is always measured
against the full item set, allocated or not. All fairness comparisons are
exact comparisons of stored doubles (no epsilon); a removed item is accounted
for by subtracting its value from the bundle sum.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .distributions import Distribution
from .rng import RngStream


@dataclass(frozen=True)
class Instance:
    """n agents, m items, utility matrix u[i, j] in [0, 1]."""

    u: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=np.float64)
        if u.ndim != 2:
            raise ValueError("utility matrix must be 2-dimensional")
        if u.size and (not np.isfinite(u).all() or u.min() < 0.0 or u.max() > 1.0):
            raise ValueError("utilities must lie in [0, 1]")
        object.__setattr__(self, "u", u)

    @property
    def n(self) -> int:
        return self.u.shape[0]

    @property
    def m(self) -> int:
        return self.u.shape[1]


@dataclass(frozen=True)
class Allocation:
    """Disjoint per-agent bundles; items in no bundle sit in `unallocated`."""

    bundles: tuple[tuple[int, ...], ...]
    unallocated: tuple[int, ...] = ()

    def __post_init__(self):
        bundles = tuple(tuple(sorted(int(j) for j in b)) for b in self.bundles)
        unallocated = tuple(sorted(int(j) for j in self.unallocated))
        seen: set[int] = set()
        for b in bundles + (unallocated,):
            for j in b:
                if j < 0 or j in seen:
                    raise ValueError("bundles must be disjoint nonnegative item indices")
                seen.add(j)
        object.__setattr__(self, "bundles", bundles)
        object.__setattr__(self, "unallocated", unallocated)

    @property
    def n(self) -> int:
        return len(self.bundles)


@dataclass(frozen=True)
class Assignment:
    """One item per agent (or None); assigned items are pairwise distinct."""

    assigned: tuple[int | None, ...]

    def __post_init__(self):
        items = [j for j in self.assigned if j is not None]
        if len(set(items)) != len(items):
            raise ValueError("assigned items must be distinct")
        object.__setattr__(self, "assigned", tuple(self.assigned))

    @property
    def n(self) -> int:
        return len(self.assigned)

    def complete(self) -> bool:
        return all(j is not None for j in self.assigned)


@dataclass(frozen=True)
class RankingProfile:
    """Strict preference orders: rankings[i] lists items best-first."""

    rankings: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rankings, dtype=np.int64)
        if r.ndim != 2:
            raise ValueError("rankings must be 2-dimensional")
        n, m = r.shape
        if m and not (np.sort(r, axis=1) == np.arange(m)).all():
            raise ValueError("every row must be a permutation of 0..m-1")
        object.__setattr__(self, "rankings", r)

    @property
    def n(self) -> int:
        return self.rankings.shape[0]

    @property
    def m(self) -> int:
        return self.rankings.shape[1]


@dataclass(frozen=True)
class FairnessReport:
    envy_free: bool
    efx: bool
    ef1: bool
    proportional: bool
    # first envy found, scanning pairs (i, i') lexicographically: the item is
    # the first j in i''s bundle whose removal leaves i still envious, or None
    witness: tuple[int, int, int | None] | None = None

    def flags(self) -> dict[str, bool]:
        return {
            "envy_free": self.envy_free,
            "efx": self.efx,
            "ef1": self.ef1,
            "proportional": self.proportional,
        }


def sample_instance(n: int, m: int, dist: Distribution, rng: RngStream) -> Instance:
    """Instance with n*m i.i.d. values, drawn in row-major order."""
    if n < 1 or m < 0:
        raise ValueError("need n >= 1 and m >= 0")
    u = dist._quantile(rng.uniforms(n * m)).reshape(n, m)
    return Instance(u)


def sample_profile(n: int, m: int, rng: RngStream) -> RankingProfile:
    """n independent uniformly random strict rankings of m items."""
    if n < 1 or m < 1:
        raise ValueError("need n >= 1 and m >= 1")
    return RankingProfile(rng.permutations(n, m))


def bundle_utility(inst: Instance, agent: int, items: Iterable[int]) -> float:
    idx = list(items)
    if not idx:
        return 0.0
    return float(inst.u[agent, idx].sum())


def rankings_from_instance(inst: Instance) -> RankingProfile:
    """Each agent's items in descending value; equal values break toward the
    lower item index."""
    order = np.argsort(-inst.u, axis=1, kind="stable")
    return RankingProfile(order)


def _bundle_stats(u: np.ndarray, bundles: Sequence[Sequence[int]]):
    """vals[i, b], minv[i, b], maxv[i, b] over every agent i and bundle b."""
    n = u.shape[0]
    nb = len(bundles)
    vals = np.zeros((n, nb))
    minv = np.full((n, nb), np.inf)
    maxv = np.full((n, nb), -np.inf)
    for b, items in enumerate(bundles):
        if items:
            sub = u[:, list(items)]
            vals[:, b] = sub.sum(axis=1)
            minv[:, b] = sub.min(axis=1)
            maxv[:, b] = sub.max(axis=1)
    return vals, minv, maxv


def fairness_report(inst: Instance, alloc: Allocation) -> FairnessReport:
    """Evaluate envy-freeness, EFX, EF1, and proportionality.

    EFX demands own-value >= other's bundle minus ANY single item (so minus its
    least valuable one suffices to check); EF1 demands SOME single removal kills
    the envy (minus its most valuable one). Proportionality compares against
    the value of all m items, so unallocated items still count.
    """
    n, m = inst.n, inst.m
    if alloc.n != n:
        raise ValueError("allocation has wrong number of bundles")
    used = [j for b in alloc.bundles for j in b] + list(alloc.unallocated)
    if used and (max(used) >= m or len(used) > m):
        raise ValueError("allocation refers to items outside the instance")
    vals, minv, maxv = _bundle_stats(inst.u, alloc.bundles)
    own = vals.diagonal().copy()
    envy = vals > own[:, None]
    nonempty = np.array([len(b) > 0 for b in alloc.bundles], dtype=bool)
    efx_bad = nonempty[None, :] & ((vals - minv) > own[:, None])
    ef1_bad = envy & ~(nonempty[None, :] & ((vals - maxv) <= own[:, None]))
    envy_free = not bool(envy.any())
    efx = not bool(efx_bad.any())
    ef1 = not bool(ef1_bad.any())
    total = inst.u.sum(axis=1) if m else np.zeros(n)
    proportional = bool(np.all(own >= total / n))
    witness = None
    if not envy_free:
        i, ip = np.unravel_index(int(np.argmax(envy)), envy.shape)
        j_bad = None
        for j in alloc.bundles[ip]:
            if vals[i, ip] - inst.u[i, j] > own[i]:
                j_bad = int(j)
                break
        witness = (int(i), int(ip), j_bad)
    return FairnessReport(envy_free, efx, ef1, proportional, witness)


def is_ef_assignment(src: Instance | RankingProfile, assignment: Assignment):
    """Whether no agent prefers another agent's assigned item to her own.

    Accepts either a utility instance or a ranking profile; the assignment
    must be complete. Returns (flag, witness) where witness is the first
    envious pair (i, i') in scan order, or None.
    """
    if not assignment.complete():
        raise ValueError("assignment must give every agent an item")
    psi = np.array([int(j) for j in assignment.assigned], dtype=np.int64)
    if isinstance(src, RankingProfile):
        n, m = src.n, src.m
        if psi.size != n or (psi.size and psi.max() >= m):
            raise ValueError("assignment does not match the profile")
        pos = np.empty((n, m), dtype=np.int64)
        np.put_along_axis(pos, src.rankings, np.arange(m)[None, :], axis=1)
        score = pos[:, psi]  # score[i, i'] = rank of psi(i') for agent i
        own = score.diagonal()
        better = score < own[:, None]
    else:
        n, m = src.n, src.m
        if psi.size != n or (psi.size and psi.max() >= m):
            raise ValueError("assignment does not match the instance")
        vals = src.u[:, psi]
        own = vals.diagonal()
        better = vals > own[:, None]
    if not better.any():
        return True, None
    i, ip = np.unravel_index(int(np.argmax(better)), better.shape)
    return False, (int(i), int(ip))


def instance_to_dict(inst: Instance) -> dict:
    return {"n": inst.n, "m": inst.m, "utilities": [float(v) for v in inst.u.ravel()]}


def instance_from_dict(d: dict) -> Instance:
    n, m = int(d["n"]), int(d["m"])
    u = np.asarray(d["utilities"], dtype=np.float64).reshape(n, m)
    return Instance(u)


def allocation_to_dict(alloc: Allocation) -> dict:
    return {
        "bundles": [list(b) for b in alloc.bundles],
        "unallocated": list(alloc.unallocated),
    }


def report_to_dict(report: FairnessReport) -> dict:
    return {"flags": report.flags(), "witness": list(report.witness) if report.witness else None}
