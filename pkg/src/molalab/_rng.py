"""Seeded random number generation pinned to a fixed algorithm.

Game fixtures must be reproducible bit-for-bit from a 64-bit seed, on any
platform and in any language a collaborator might port them to.  We therefore
pin the generator explicitly instead of relying on a library default:

* stream: xoshiro256++ (Blackman & Vigna), state seeded via splitmix64;
* uniforms: top 53 bits mapped to (0, 1];
* gaussians: Box-Muller on consecutive uniform pairs.

Streams for unrelated purposes are decorrelated by hashing a short ASCII tag
into the seed with splitmix64 before constructing the generator.
"""

from __future__ import annotations

import math

_MASK = (1 << 64) - 1


def _splitmix64(x: int) -> tuple[int, int]:
    """One splitmix64 step: returns (new state, output)."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return x, z ^ (z >> 31)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK


def derive_seed(seed: int, tag: str) -> int:
    """Fold an ASCII tag into a seed so distinct purposes get distinct streams."""
    x = seed & _MASK
    for ch in tag.encode("ascii"):
        x, _ = _splitmix64(x ^ ch)
    _, out = _splitmix64(x)
    return out


class Xoshiro256PP:
    """xoshiro256++ stream with splitmix64 state expansion."""

    def __init__(self, seed: int):
        if seed < 0:
            raise ValueError("seed must be a nonnegative 64-bit integer")
        state = []
        x = seed & _MASK
        for _ in range(4):
            x, out = _splitmix64(x)
            state.append(out)
        self._s = state

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (_rotl((s0 + s3) & _MASK, 23) + s0) & _MASK
        t = (s1 << 17) & _MASK
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def uniform(self) -> float:
        """Uniform draw in (0, 1]; never 0, so log() below is safe."""
        return ((self.next_u64() >> 11) + 1) * 2.0 ** -53

    def normal(self) -> float:
        z, _ = self.normal_pair()
        return z

    def normal_pair(self) -> tuple[float, float]:
        """One Box-Muller transform: two independent standard normals."""
        u1 = self.uniform()
        u2 = self.uniform()
        r = math.sqrt(-2.0 * math.log(u1))
        return r * math.cos(2.0 * math.pi * u2), r * math.sin(2.0 * math.pi * u2)

    def normals(self, n: int) -> list[float]:
        out = []
        while len(out) < n:
            out.extend(self.normal_pair())
        return out[:n]
