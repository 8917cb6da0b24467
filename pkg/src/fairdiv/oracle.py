"""Exhaustive cross-checks for small problems.

Everything here enumerates the full search space with no pruning, trading
speed for being obviously correct; the size guards are hard errors so nobody
silently waits on an exponential loop. These routines exist to referee the
fast implementations, never to be fast themselves.
"""

from __future__ import annotations

from itertools import permutations, product

import numpy as np

from .matching import WeightedAssignmentProblem
from .model import Allocation, Assignment, Instance, RankingProfile

CRITERIA = ("envy_free", "efx", "ef1", "proportional")

_MAX_ALLOCATIONS = 10**7
_MAX_INJECTIONS = 10**6


def _check_bundles(u_rows, bundles, criterion, share):
    n = len(bundles)
    vals = [[sum(row[j] for j in b) for b in bundles] for row in u_rows]
    if criterion == "proportional":
        return all(vals[i][i] >= share[i] for i in range(n))
    for i in range(n):
        own = vals[i][i]
        for ip in range(n):
            if ip == i:
                continue
            other = vals[i][ip]
            if criterion == "envy_free":
                if other > own:
                    return False
            elif criterion == "efx":
                for j in bundles[ip]:
                    if other - u_rows[i][j] > own:
                        return False
            elif criterion == "ef1":
                if other > own and not any(other - u_rows[i][j] <= own for j in bundles[ip]):
                    return False
    return True


def exists_fair_allocation(inst: Instance, criterion: str):
    """Whether any complete allocation of all m items satisfies the criterion.

    Returns (flag, witness): the first satisfying allocation in lexicographic
    owner-vector order, or (False, None).
    """
    if criterion not in CRITERIA:
        raise ValueError(f"criterion must be one of {CRITERIA}")
    n, m = inst.n, inst.m
    if n**m > _MAX_ALLOCATIONS:
        raise ValueError(f"{n}**{m} allocations exceed the enumeration guard")
    u_rows = inst.u.tolist()
    share = [sum(row) / n for row in u_rows]
    for combo in product(range(n), repeat=m):
        bundles = [[] for _ in range(n)]
        for j, owner in enumerate(combo):
            bundles[owner].append(j)
        if _check_bundles(u_rows, bundles, criterion, share):
            return True, Allocation(tuple(tuple(b) for b in bundles))
    return False, None


def _injection_count(n: int, m: int) -> int:
    count = 1
    for k in range(n):
        count *= m - k
    return count


def exists_ef_assignment_bruteforce(profile: RankingProfile):
    """Whether some assignment of distinct items is envy-free for the profile.

    With strict rankings an assignment is envy-free exactly when every agent's
    item is her favorite among all assigned items. Returns (flag, witness):
    the first envy-free injection in lexicographic order, or (False, None).
    """
    n, m = profile.n, profile.m
    if m < n:
        return False, None
    if _injection_count(n, m) > _MAX_INJECTIONS:
        raise ValueError("injection count exceeds the enumeration guard")
    pos = np.empty((n, m), dtype=np.int64)
    np.put_along_axis(pos, profile.rankings, np.arange(m)[None, :], axis=1)
    pos_rows = pos.tolist()
    for psi in permutations(range(m), n):
        ok = True
        for i in range(n):
            own = pos_rows[i][psi[i]]
            for j in psi:
                if pos_rows[i][j] < own:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            return True, Assignment(psi)
    return False, None


def brute_max_weight(p: WeightedAssignmentProblem):
    """(psi, total) maximizing total weight over allowed injections, else None.

    Ties resolve to the lexicographically first injection. Guarded to n <= 8.
    """
    n, m = p.weights.shape
    if n > 8:
        raise ValueError("brute force is guarded to n <= 8 rows")
    if _injection_count(n, m) > _MAX_ALLOCATIONS:
        raise ValueError("injection count exceeds the enumeration guard")
    w_rows = p.weights.tolist()
    a_rows = p.allowed.tolist()
    best = None
    best_total = -np.inf
    for psi in permutations(range(m), n):
        total = 0.0
        ok = True
        for i, j in enumerate(psi):
            if not a_rows[i][j]:
                ok = False
                break
            total += w_rows[i][j]
        if ok and total > best_total:
            best_total = total
            best = psi
    if best is None:
        return None
    return np.array(best, dtype=np.int64), float(best_total)
