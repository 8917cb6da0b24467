"""Deterministic random streams.

xoshiro256++ with SplitMix64 seed expansion (the published reference
constants), so a seed produces the same double sequence on every platform.
Child streams are derived from (seed, index) through the SplitMix64 finalizer,
which is a bijection on 64-bit words: distinct indices can never collide.
"""

from __future__ import annotations

import numpy as np

from . import _kernels

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_INV53 = 1.0 / 9007199254740992.0  # 2**-53


def _mix64(z: int) -> int:
    # SplitMix64 output scrambler (Stafford mix13 variant used by the reference).
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def splitmix64(seed: int, count: int) -> list[int]:
    """First `count` outputs of SplitMix64 started at `seed`."""
    s = seed & _MASK
    out = []
    for _ in range(count):
        s = (s + _GAMMA) & _MASK
        out.append(_mix64(s))
    return out


def derive_seed(seed: int, *indices: int) -> int:
    """Fold indices into a seed, one SplitMix64 step per level.

    Injective in the last index for a fixed prefix (odd gamma, bijective mix),
    so sibling streams are pairwise distinct.
    """
    s = seed & _MASK
    for ix in indices:
        s = _mix64((s + _GAMMA * (ix + 1)) & _MASK)
    return s


class RngStream:
    """A single xoshiro256++ stream.

    Scalar draws run in Python; block draws run in the compiled kernel. Both
    advance the same 4-word state, so mixing them keeps one well-defined
    sequence. Doubles carry 53 random mantissa bits and lie in [0, 1).
    """

    __slots__ = ("seed", "_state")

    def __init__(self, seed: int):
        self.seed = seed & _MASK
        self._state = np.array(splitmix64(self.seed, 4), dtype=np.uint64)

    def child(self, index: int) -> "RngStream":
        return RngStream(derive_seed(self.seed, index))

    def next_uint64(self) -> int:
        st = self._state
        s0, s1, s2, s3 = int(st[0]), int(st[1]), int(st[2]), int(st[3])
        x = (s0 + s3) & _MASK
        r = ((((x << 23) & _MASK) | (x >> 41)) + s0) & _MASK
        t = (s1 << 17) & _MASK
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = ((s3 << 45) & _MASK) | (s3 >> 19)
        st[0] = s0
        st[1] = s1
        st[2] = s2
        st[3] = s3
        return r

    def random(self) -> float:
        return (self.next_uint64() >> 11) * _INV53

    def uniforms(self, count: int) -> np.ndarray:
        """Block of `count` doubles in [0, 1), identical to `count` random() calls."""
        out = np.empty(count, dtype=np.float64)
        if count:
            _kernels.fill_uniforms(self._state, out)
        return out

    def permutations(self, n: int, m: int) -> np.ndarray:
        """n independent uniform permutations of 0..m-1, one row each."""
        return _kernels.sample_permutations(self._state, n, m)

    def __repr__(self) -> str:  # pragma: no cover
        return f"RngStream(seed={self.seed:#018x})"
