"""Deterministic bipartite matching and digraph utilities.

Maximum-cardinality matching is a hand-written Hopcroft-Karp (iterative, so
deep augmenting paths cannot hit the recursion limit); saturating_matching
adds a Hall-condition witness on failure. Maximum-weight assignment wraps
scipy's exact solver behind a feasibility-first treatment of forbidden edges:
infeasibility is detected by matching on the allowed edges alone, never by
sentinel weights leaking into the optimum. All tie-breaking follows ascending
vertex index, so identical inputs give identical outputs everywhere.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from heapq import heappop, heappush

import numpy as np
from scipy.optimize import linear_sum_assignment

_INF = float("inf")


@dataclass(frozen=True)
class BipartiteGraph:
    left_size: int
    right_size: int
    edges: tuple[tuple[int, int], ...]
    adjacency: tuple[tuple[int, ...], ...] = field(init=False, repr=False)

    def __post_init__(self):
        adj: list[list[int]] = [[] for _ in range(self.left_size)]
        seen = set()
        for u, v in self.edges:
            if not (0 <= u < self.left_size and 0 <= v < self.right_size):
                raise ValueError(f"edge ({u}, {v}) out of range")
            if (u, v) not in seen:
                seen.add((u, v))
                adj[u].append(v)
        object.__setattr__(self, "edges", tuple(sorted(seen)))
        object.__setattr__(self, "adjacency", tuple(tuple(sorted(a)) for a in adj))

    @classmethod
    def from_mask(cls, mask: np.ndarray) -> "BipartiteGraph":
        mask = np.asarray(mask, dtype=bool)
        us, vs = np.nonzero(mask)
        return cls(mask.shape[0], mask.shape[1], tuple(zip(us.tolist(), vs.tolist())))


@dataclass(frozen=True)
class Matching:
    left_to_right: tuple[int, ...]  # -1 where unmatched

    @property
    def size(self) -> int:
        return sum(1 for v in self.left_to_right if v >= 0)

    @property
    def pairs(self) -> tuple[tuple[int, int], ...]:
        return tuple((u, v) for u, v in enumerate(self.left_to_right) if v >= 0)


def _augment(u0, adj, match_l, match_r, dist):
    """One layered DFS from free vertex u0, iterative with an explicit stack."""
    stack = [(u0, 0)]
    path: list[tuple[int, int]] = []
    while stack:
        u, k = stack[-1]
        if k == len(adj[u]):
            dist[u] = _INF  # dead end for this phase
            stack.pop()
            if stack:
                pu, pk = stack.pop()
                stack.append((pu, pk + 1))
                path.pop()
            continue
        v = adj[u][k]
        w = match_r[v]
        if w == -1:
            path.append((u, v))
            for a, b in path:
                match_l[a] = b
                match_r[b] = a
            return True
        if dist[w] == dist[u] + 1:
            path.append((u, v))
            stack.append((w, 0))
        else:
            stack[-1] = (u, k + 1)
    return False


def _hopcroft_karp(adjacency, left_size, right_size, active=None):
    adj = [adjacency[u] if (active is None or active[u]) else () for u in range(left_size)]
    match_l = [-1] * left_size
    match_r = [-1] * right_size
    while True:
        # BFS builds layers from free left vertices through matched partners
        dist = [_INF] * left_size
        queue = deque()
        for u in range(left_size):
            if adj[u] and match_l[u] == -1:
                dist[u] = 0
                queue.append(u)
        reachable_free = False
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                w = match_r[v]
                if w == -1:
                    reachable_free = True
                elif dist[w] == _INF:
                    dist[w] = dist[u] + 1
                    queue.append(w)
        if not reachable_free:
            return match_l, match_r
        for u in range(left_size):
            if match_l[u] == -1 and dist[u] == 0:
                _augment(u, adj, match_l, match_r, dist)


def max_cardinality_matching(g: BipartiteGraph) -> Matching:
    match_l, _ = _hopcroft_karp(g.adjacency, g.left_size, g.right_size)
    return Matching(tuple(match_l))


def saturating_matching(g: BipartiteGraph, left_subset):
    """Match every vertex of left_subset, or exhibit why none can.

    Returns (matching, None) when a matching covering the subset exists,
    otherwise (None, witness): a subset S of left_subset whose joint
    neighborhood has fewer than |S| vertices (Hall's condition fails).
    """
    subset = sorted(set(int(u) for u in left_subset))
    active = [False] * g.left_size
    for u in subset:
        if not 0 <= u < g.left_size:
            raise ValueError(f"left vertex {u} out of range")
        active[u] = True
    match_l, match_r = _hopcroft_karp(g.adjacency, g.left_size, g.right_size, active)
    unmatched = [u for u in subset if match_l[u] == -1]
    if not unmatched:
        return Matching(tuple(match_l)), None
    # grow the witness by alternating paths from one unmatched vertex: every
    # reachable right vertex is matched (else the matching was not maximum)
    u0 = unmatched[0]
    in_s = {u0}
    seen_r: set[int] = set()
    frontier = [u0]
    while frontier:
        nxt = []
        for u in frontier:
            for v in g.adjacency[u]:
                if v in seen_r:
                    continue
                seen_r.add(v)
                w = match_r[v]
                if w == -1:
                    raise AssertionError("augmenting path escaped maximum matching")
                if w not in in_s:
                    in_s.add(w)
                    nxt.append(w)
        frontier = nxt
    return None, tuple(sorted(in_s))


@dataclass(frozen=True)
class WeightedAssignmentProblem:
    weights: np.ndarray  # (n, m) reals, n <= m
    allowed: np.ndarray  # (n, m) bool

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        a = np.asarray(self.allowed, dtype=bool)
        if w.ndim != 2 or a.shape != w.shape:
            raise ValueError("weights and allowed mask must share a 2-d shape")
        if w.shape[0] > w.shape[1]:
            raise ValueError("need left size <= right size")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "allowed", a)


def max_weight_assignment(p: WeightedAssignmentProblem):
    """Maximum total weight over assignments using only allowed edges.

    Returns (psi, total) with psi[i] = column of row i, or None when no
    perfect assignment of the rows exists. Feasibility is decided first by
    maximum-cardinality matching on the allowed edges; afterwards forbidden
    entries get a finite sentinel that no feasible optimum can touch.
    """
    n, m = p.weights.shape
    if n == 0:
        return np.empty(0, dtype=np.int64), 0.0
    g = BipartiteGraph.from_mask(p.allowed)
    if max_cardinality_matching(g).size < n:
        return None
    big = n * (float(np.abs(p.weights).max(initial=0.0)) + 1.0) + 1.0
    cost = np.where(p.allowed, p.weights, -big)
    rows, cols = linear_sum_assignment(cost, maximize=True)
    if not p.allowed[rows, cols].all():  # pragma: no cover - sentinel cannot win
        raise AssertionError("solver picked a forbidden edge despite feasibility")
    psi = np.empty(n, dtype=np.int64)
    psi[rows] = cols
    total = float(p.weights[rows, cols].sum())
    return psi, total


@dataclass(frozen=True)
class Digraph:
    n: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        for a, b in self.edges:
            if not (0 <= a < self.n and 0 <= b < self.n):
                raise ValueError(f"edge ({a}, {b}) out of range")
        object.__setattr__(self, "edges", tuple(self.edges))


def topological_order(d: Digraph):
    """Kahn's algorithm, smallest-index vertex dequeued first.

    Returns (order, None) for a DAG, else (None, cycle) with the cycle listed
    in walk order starting from its smallest vertex.
    """
    out: list[list[int]] = [[] for _ in range(d.n)]
    indeg = [0] * d.n
    for a, b in d.edges:
        out[a].append(b)
        indeg[b] += 1
    heap = [v for v in range(d.n) if indeg[v] == 0]
    heap.sort()
    order = []
    while heap:
        v = heappop(heap)
        order.append(v)
        for w in sorted(out[v]):
            indeg[w] -= 1
            if indeg[w] == 0:
                heappush(heap, w)
    if len(order) == d.n:
        return order, None
    # every leftover vertex keeps positive in-degree inside the leftover set,
    # so walking backwards along in-edges must revisit a vertex
    remaining = {v for v in range(d.n) if indeg[v] > 0}
    rem_in: dict[int, list[int]] = {v: [] for v in remaining}
    for a, b in d.edges:
        if a in remaining and b in remaining:
            rem_in[b].append(a)
    start = min(remaining)
    seen_at = {start: 0}
    walk = [start]
    while True:
        v = min(rem_in[walk[-1]])
        if v in seen_at:
            seg = walk[seen_at[v]:]
            # edges run seg[k+1] -> seg[k], plus seg[0] -> walk[-1]
            cycle = [seg[0]] + seg[:0:-1]
            k = cycle.index(min(cycle))
            return None, cycle[k:] + cycle[:k]
        seen_at[v] = len(walk)
        walk.append(v)
