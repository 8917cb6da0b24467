"""Allocation algorithms and the dispatchers that pick between them.

Thresholds that depend on the value distribution take its declared minimum
density through the `alpha` parameter (1.0 for uniform values); logarithms in
those thresholds are base 2. Partial allocations are legitimate outputs:
whatever an algorithm leaves unassigned lands in Allocation.unallocated.

A dispatcher never fails silently: when a component returns nothing, it falls
back to reversed-last-round round-robin and says so via fallback_used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .distributions import Distribution
from .matching import (
    BipartiteGraph,
    Digraph,
    WeightedAssignmentProblem,
    max_cardinality_matching,
    max_weight_assignment,
    saturating_matching,
    topological_order,
)
from .model import Allocation, Instance, fairness_report
from .rng import RngStream


@dataclass(frozen=True)
class AllocatorResult:
    allocation: Allocation | None
    algorithm_tag: str
    fallback_used: bool = False
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class RoundRobinTrace:
    """picks: (round, agent, item, value) per pick, in picking order.
    value_tensor[a, b, t] = agent a's value for the item agent b took in
    round t (NaN where b took nothing in round t)."""

    picks: tuple[tuple[int, int, int, float], ...]
    value_tensor: np.ndarray


def _clamp01(x: float) -> float:
    return min(1.0, max(0.0, x))


def default_two_stage_tau(n: int, alpha: float = 1.0) -> float:
    return _clamp01(1.0 - 1.1 * math.log2(n) / (alpha * n))


def default_assignment_tau(n: int, alpha: float = 1.0) -> float:
    return _clamp01(1.0 - 2.0 * math.log2(n) / (alpha * n))


def dispatch_threshold(n: int) -> int:
    """Leftover-size cutoff Q(n) between the reversed round-robin regime and
    the matching-based regimes."""
    return math.ceil(math.log2(max(n, 2)))


def _run_picks(inst: Instance, order: np.ndarray, rounds: np.ndarray, tag: str):
    """Shared core: agents pick their best remaining item in `order`."""
    u = inst.u
    n, m = inst.n, inst.m
    if order.size:
        pref = np.argsort(-u, axis=1, kind="stable")
        items = _kernels.sequential_picks(pref, order)
    else:
        items = np.empty(0, dtype=np.int64)
    t_count = int(rounds.max()) + 1 if rounds.size else 0
    tensor = np.full((n, n, t_count), np.nan)
    if order.size:
        tensor[:, order, rounds] = u[:, items]
    bundles: list[list[int]] = [[] for _ in range(n)]
    picks = []
    for p in range(order.size):
        i = int(order[p])
        j = int(items[p])
        bundles[i].append(j)
        picks.append((int(rounds[p]), i, j, float(u[i, j])))
    unallocated = sorted(set(range(m)) - set(items.tolist()))
    alloc = Allocation(tuple(tuple(b) for b in bundles), tuple(unallocated))
    return AllocatorResult(alloc, tag), RoundRobinTrace(tuple(picks), tensor)


def round_robin(inst: Instance):
    """Agents 0..n-1 repeatedly pick their favorite remaining item, lowest
    value-tie index first, until items run out."""
    n, m = inst.n, inst.m
    order = np.resize(np.arange(n, dtype=np.int64), m) if m else np.empty(0, dtype=np.int64)
    rounds = np.arange(m, dtype=np.int64) // n
    result, trace = _run_picks(inst, order, rounds, "rr")
    # First-picker dominance: agent 0's k-th pick beats anyone's k-th item in
    # agent 0's eyes, so agent 0 never envies. Exact, no tolerance.
    sums = np.nansum(trace.value_tensor[0], axis=1)
    assert np.all(sums <= sums[0])
    return result, trace


def round_robin_reversed_last(inst: Instance):
    """Round-robin whose final partial round runs in reverse agent order.

    With r = floor(m/n) full rounds and q = m - n*r leftover picks, the last
    round is taken by agents n-1, n-2, ..., n-q (so the late pickers of the
    full rounds pick first once more items are scarce).
    """
    n, m = inst.n, inst.m
    if not 1 <= n <= m:
        raise ValueError("need 1 <= n <= m")
    r, q = divmod(m, n)
    order = np.concatenate(
        [
            np.resize(np.arange(n, dtype=np.int64), n * r),
            np.arange(n - 1, n - q - 1, -1, dtype=np.int64),
        ]
    )
    rounds = np.concatenate(
        [
            np.arange(n * r, dtype=np.int64) // n,
            np.full(q, r, dtype=np.int64),
        ]
    )
    return _run_picks(inst, order, rounds, "rr-rev")


def threshold_matching(inst: Instance, tau: float, items) -> AllocatorResult:
    """Perfect matching of agents to `items` over edges with value >= tau.

    `items` must hold exactly n item indices. Returns singleton bundles or a
    NULL result when no perfect matching exists.
    """
    items = [int(j) for j in items]
    n = inst.n
    if len(items) != n or len(set(items)) != n:
        raise ValueError("items must be n distinct item indices")
    mask = inst.u[:, items] >= tau
    matching = max_cardinality_matching(BipartiteGraph.from_mask(mask))
    if matching.size < n:
        return AllocatorResult(None, "threshold")
    bundles = tuple((items[matching.left_to_right[i]],) for i in range(n))
    unallocated = tuple(sorted(set(range(inst.m)) - {b[0] for b in bundles}))
    return AllocatorResult(Allocation(bundles, unallocated), "threshold")


def two_stage_matching(inst: Instance, tau: float | None = None, alpha: float = 1.0) -> AllocatorResult:
    """Threshold-match the first n items, then top up shortchanged agents.

    An agent is shortchanged when her matched item is worth less than her
    proportional share of everything; a second matching over the remaining
    items must grant each of them one item covering the deficit, else NULL.
    Requires n <= m <= 2n. Non-NULL outputs are proportional by construction.
    """
    n, m = inst.n, inst.m
    if not n <= m <= 2 * n:
        raise ValueError("need n <= m <= 2n")
    if tau is None:
        tau = default_two_stage_tau(n, alpha)
    stage1 = threshold_matching(inst, tau, range(n))
    if stage1.allocation is None:
        return AllocatorResult(None, "two-stage", diagnostics={"stage": 1})
    base = [b[0] for b in stage1.allocation.bundles]
    own0 = inst.u[np.arange(n), base]
    share = inst.u.sum(axis=1) / n
    violated = np.nonzero(own0 < share)[0]
    if violated.size == 0:
        return AllocatorResult(
            Allocation(tuple((j,) for j in base), tuple(range(n, m))),
            "two-stage",
            diagnostics={"violated": 0},
        )
    fix_items = list(range(n, m))
    deficit = share - own0
    edges = []
    for i in violated:
        for k, j in enumerate(fix_items):
            if inst.u[i, j] >= deficit[i]:
                edges.append((int(i), k))
    graph = BipartiteGraph(n, len(fix_items), tuple(edges))
    matching, _witness = saturating_matching(graph, violated.tolist())
    if matching is None:
        return AllocatorResult(None, "two-stage", diagnostics={"stage": 2, "violated": int(violated.size)})
    bundles = [[j] for j in base]
    used = set()
    for i in violated:
        k = matching.left_to_right[i]
        bundles[int(i)].append(fix_items[k])
        used.add(fix_items[k])
    unallocated = tuple(j for j in fix_items if j not in used)
    return AllocatorResult(
        Allocation(tuple(tuple(b) for b in bundles), unallocated),
        "two-stage",
        diagnostics={"violated": int(violated.size)},
    )


def balanced_ef_subroutine(inst: Instance, items, rounds: int, alpha: float = 1.0) -> AllocatorResult:
    """`rounds` successive maximum-weight perfect assignments over `items`.

    Every agent ends with exactly `rounds` of the given items. The output is
    kept only if the resulting partial allocation is envy-free and every
    assigned item is worth at least 1 - 2*log2(m)/(alpha*n) to its owner;
    otherwise the result is NULL (an honest failure, not an error).
    """
    n, m = inst.n, inst.m
    items = [int(j) for j in items]
    if rounds < 1 or len(items) != rounds * n:
        raise ValueError("need exactly rounds * n items")
    remaining = list(items)
    bundles: list[list[int]] = [[] for _ in range(n)]
    for _ in range(rounds):
        w = inst.u[:, remaining]
        psi_total = max_weight_assignment(
            WeightedAssignmentProblem(w, np.ones_like(w, dtype=bool))
        )
        assert psi_total is not None  # all edges allowed, so a full assignment exists
        psi, _ = psi_total
        chosen = [remaining[k] for k in psi.tolist()]
        for i, j in enumerate(chosen):
            bundles[i].append(j)
        remaining = [j for j in remaining if j not in set(chosen)]
    assert all(len(b) == rounds for b in bundles)
    alloc = Allocation(
        tuple(tuple(b) for b in bundles),
        tuple(sorted(set(range(m)) - set(items))),
    )
    tau_floor = _clamp01(1.0 - 2.0 * math.log2(m) / (alpha * n)) if m else 1.0
    values = [inst.u[i, j] for i in range(n) for j in bundles[i]]
    if min(values) < tau_floor:
        return AllocatorResult(None, "balanced-ef", diagnostics={"failure": "value"})
    if not fairness_report(inst, alloc).envy_free:
        return AllocatorResult(None, "balanced-ef", diagnostics={"failure": "envy"})
    return AllocatorResult(alloc, "balanced-ef")


def efx_via_ef(inst: Instance, alpha: float = 1.0) -> AllocatorResult:
    """Balanced envy-free core on the first r*n items, one leftover each to
    the last agents. Requires r = floor(m/n) >= 2."""
    n, m = inst.n, inst.m
    r, q = divmod(m, n)
    if r < 2:
        raise ValueError("need floor(m/n) >= 2")
    core = balanced_ef_subroutine(inst, range(r * n), r, alpha)
    if core.allocation is None:
        return AllocatorResult(None, "efx-via-ef", diagnostics=dict(core.diagnostics))
    bundles = [list(b) for b in core.allocation.bundles]
    for k in range(q):
        bundles[n - q + k].append(r * n + k)
    return AllocatorResult(
        Allocation(tuple(tuple(b) for b in bundles)),
        "efx-via-ef",
        diagnostics=dict(core.diagnostics),
    )


def maximum_assignment_efx(inst: Instance, tau: float | None = None, alpha: float = 1.0) -> AllocatorResult:
    """Maximum-weight assignment over edges with value >= tau, leftovers by
    envy order.

    The envy graph of the assignment (i -> i' when i values i''s item more
    than her own) is acyclic, because swapping along a cycle would raise the
    total weight; agents are ranked topologically and the k-th ranked agent
    receives the k-th unassigned item (ascending item index). Intended for
    n <= m < 2n; NULL when no full assignment clears the threshold.
    """
    n, m = inst.n, inst.m
    if m < n:
        raise ValueError("need m >= n")
    if tau is None:
        tau = default_assignment_tau(n, alpha)
    result = max_weight_assignment(
        WeightedAssignmentProblem(inst.u, inst.u >= tau)
    )
    if result is None:
        return AllocatorResult(None, "max-assign")
    psi, _total = result
    own = inst.u[np.arange(n), psi]
    vals = inst.u[:, psi]
    envy_pairs = np.nonzero(vals > own[:, None])
    digraph = Digraph(n, tuple(zip(envy_pairs[0].tolist(), envy_pairs[1].tolist())))
    order, cycle = topological_order(digraph)
    if order is None:  # pragma: no cover - contradicts assignment optimality
        raise RuntimeError(f"envy cycle {cycle} on a maximum-weight assignment")
    assigned = set(psi.tolist())
    unused = [j for j in range(m) if j not in assigned]
    bundles = [[int(psi[i])] for i in range(n)]
    take = min(len(unused), n)
    for k in range(take):
        bundles[order[k]].append(unused[k])
    unallocated = tuple(unused[take:])
    return AllocatorResult(
        Allocation(tuple(tuple(b) for b in bundles), unallocated),
        "max-assign",
        diagnostics={"rank_of_agent": {int(a): k + 1 for k, a in enumerate(order)}},
    )


def efx_dispatch(inst: Instance, alpha: float = 1.0) -> AllocatorResult:
    """Route an instance to the regime-appropriate EFX algorithm.

    m <= n: one truncated round-robin pass (trivially EFX: bundles are
    singletons or empty). Otherwise with r = floor(m/n), q = m - n*r and
    Q = dispatch_threshold(n): large leftovers (q > Q) go to reversed
    round-robin; small leftovers go to the balanced core (r >= 2) or the
    assignment route (r == 1). NULL components fall back to reversed
    round-robin with fallback_used set.
    """
    n, m = inst.n, inst.m
    if m <= n:
        result, _trace = round_robin(inst)
        return result
    r, q = divmod(m, n)
    big_q = dispatch_threshold(n)
    if q > big_q:
        result, _trace = round_robin_reversed_last(inst)
        return result
    attempt = efx_via_ef(inst, alpha) if r >= 2 else maximum_assignment_efx(inst, alpha=alpha)
    if attempt.allocation is not None:
        return attempt
    fallback, _trace = round_robin_reversed_last(inst)
    diagnostics = {"attempted": attempt.algorithm_tag, **attempt.diagnostics}
    return AllocatorResult(fallback.allocation, "rr-rev", fallback_used=True, diagnostics=diagnostics)


def prop_dispatch(inst: Instance, alpha: float = 1.0) -> AllocatorResult:
    """Proportionality route: round-robin when items are plentiful (m >= 2n),
    the two-stage matching when n <= m < 2n, NULL when m < n (pigeonhole:
    some agent would get nothing of positive share)."""
    n, m = inst.n, inst.m
    if m >= 2 * n:
        result, _trace = round_robin(inst)
        return result
    if m >= n:
        return two_stage_matching(inst, alpha=alpha)
    return AllocatorResult(None, "prop-auto")


def simulate_rr_generative(n: int, m: int, dist: Distribution, rng: RngStream) -> np.ndarray:
    """Draw a round-robin value tensor directly from its distributional law.

    Produces tensor[a, b, t] with the same joint law as RoundRobinTrace's
    value_tensor under round_robin on a sampled instance: the round-t pick of
    agent b is the maximum of the values it could still take, each bounded by
    its previous pick, and every other agent's value for that item is a fresh
    draw bounded by that agent's own current pick level.

    Draw order per pick: the picker's own value first, then the other agents
    in ascending index; one uniform per value.
    """
    if n < 1 or m < 1:
        raise ValueError("need n >= 1 and m >= 1")
    t_count = -(-m // n)
    tensor = np.full((n, n, t_count), np.nan)
    caps = np.ones(n)  # each agent's previous own pick value, 1.0 before round 0
    for t in range(t_count):
        picks = min(n, m - t * n)
        new_caps = caps.copy()
        for i in range(picks):
            k = m - t * n - i  # items the picker still chooses from
            u = rng.uniforms(n)
            own_p = dist.cdf(float(caps[i])) * u[0] ** (1.0 / k)
            others = np.concatenate([new_caps[:i], caps[i + 1:]])
            probs = np.concatenate(([own_p], dist._cdf(others) * u[1:]))
            vals = dist._quantile(probs)
            new_caps[i] = vals[0]
            tensor[i, i, t] = vals[0]
            tensor[:i, i, t] = vals[1 : i + 1]
            tensor[i + 1 :, i, t] = vals[i + 1 :]
        caps = new_caps
    return tensor
