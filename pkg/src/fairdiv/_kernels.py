"""Compiled hot loops.

Everything here is deliberately free of Python objects: kernels take numpy
arrays (including the 4-word xoshiro256++ state, which they advance in place)
and return arrays, so the pure-Python scalar paths and these block paths can
share one stream. uint64 arithmetic wraps mod 2**64 in numba, matching the
reference generator.
"""

from __future__ import annotations

import numpy as np
from numba import boolean, int64, njit, uint64

_INV53 = 1.0 / 9007199254740992.0  # 2**-53


@njit(uint64(uint64[:]), cache=True, nogil=True, inline="always")
def _next64(state):
    s0, s1, s2, s3 = state[0], state[1], state[2], state[3]
    x = s0 + s3
    r = ((x << uint64(23)) | (x >> uint64(41))) + s0
    t = s1 << uint64(17)
    s2 ^= s0
    s3 ^= s1
    s1 ^= s2
    s0 ^= s3
    s2 ^= t
    s3 = (s3 << uint64(45)) | (s3 >> uint64(19))
    state[0], state[1], state[2], state[3] = s0, s1, s2, s3
    return r


@njit(cache=True, nogil=True)
def fill_uniforms(state, out):
    """Fill `out` with doubles in [0, 1) built from 53 mantissa bits each."""
    for i in range(out.size):
        out[i] = (_next64(state) >> uint64(11)) * _INV53


@njit(cache=True, nogil=True)
def sample_permutations(state, n, m):
    """n independent uniform permutations of 0..m-1 (Fisher-Yates, row by row).

    One uniform is consumed per swap position, floor(u * span) indexing; the
    truncation bias at span <= 2**13 is below 2**-40 per draw.
    """
    out = np.empty((n, m), dtype=np.int64)
    for i in range(n):
        for j in range(m):
            out[i, j] = j
        for c in range(m - 1):
            u = (_next64(state) >> uint64(11)) * _INV53
            k = c + int64(u * (m - c))
            tmp = out[i, c]
            out[i, c] = out[i, k]
            out[i, k] = tmp
    return out


@njit(cache=True, nogil=True)
def markov_chain(state, m):
    """Trajectory of the pure death chain: X drops by 1 w.p. X/(2m - t - X).

    Runs t = 0..2m-1 and consumes exactly one uniform per step. The forced
    branch (probability 1) is exact because uniforms live in [0, 1).
    """
    X = np.empty(2 * m + 1, dtype=np.int64)
    x = m
    X[0] = x
    for t in range(2 * m):
        u = (_next64(state) >> uint64(11)) * _INV53
        if u * (2 * m - t - x) < x:
            x -= 1
        X[t + 1] = x
    return X


@njit(cache=True, nogil=True)
def greedy_run(rankings):
    """Sequential assignment with invalidation on contested items.

    rankings[i] is agent i's strict preference order (most preferred first).
    Repeatedly the lowest-index unassigned agent looks up her most preferred
    still-valid item; if someone holds it, the item is invalidated and the
    holder released, otherwise she takes it. Items never become valid again,
    so per-agent cursors only move forward.

    Returns (psi, X, Y, success): psi[i] = item or -1, and the trajectory
    (X_t = unassigned valid items, Y_t = assigned agents) after each step.
    """
    n, m = rankings.shape
    owner = np.full(m, -1, dtype=np.int64)
    psi = np.full(n, -1, dtype=np.int64)
    valid = np.ones(m, dtype=np.bool_)
    cursor = np.zeros(n, dtype=np.int64)
    X = np.empty(2 * m + 1, dtype=np.int64)
    Y = np.empty(2 * m + 1, dtype=np.int64)
    n_valid = m
    n_assigned = 0
    X[0] = m
    Y[0] = 0
    t = 0
    low = 0  # lowest-index unassigned agent
    while n_assigned < n and n_valid > 0:
        while low < n and psi[low] >= 0:
            low += 1
        i = low
        c = cursor[i]
        while not valid[rankings[i, c]]:
            c += 1
        cursor[i] = c
        j = rankings[i, c]
        holder = owner[j]
        if holder >= 0:
            psi[holder] = -1
            owner[j] = -1
            valid[j] = False
            n_valid -= 1
            n_assigned -= 1
            if holder < low:
                low = holder
        else:
            psi[i] = j
            owner[j] = i
            n_assigned += 1
        t += 1
        X[t] = n_valid - n_assigned
        Y[t] = n_assigned
    return psi, X[: t + 1], Y[: t + 1], n_assigned == n


@njit(cache=True, nogil=True)
def sequential_picks(pref, order):
    """Items chosen when agents pick greedily in the given order.

    pref[i] holds agent i's items sorted by descending value (ties broken by
    lower item index upstream); order lists the picking agent for every turn.
    Cursors only advance, so total work is picks + skipped taken items.
    """
    n, m = pref.shape
    taken = np.zeros(m, dtype=np.bool_)
    cur = np.zeros(n, dtype=np.int64)
    items = np.empty(order.size, dtype=np.int64)
    for p in range(order.size):
        i = order[p]
        c = cur[i]
        while taken[pref[i, c]]:
            c += 1
        cur[i] = c
        j = pref[i, c]
        items[p] = j
        taken[j] = True
    return items
