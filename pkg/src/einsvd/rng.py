"""Portable pseudo-random streams.

The generator is SplitMix64 (Steele, Lea & Flood 2014). With state ``s`` the
``i``-th output (``i`` starting at 1) is::

    z = s + i * 0x9E3779B97F4A7C15            (mod 2**64)
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    z =  z ^ (z >> 31)

Uniforms are ``(z >> 11) * 2**-53`` in ``[0, 1)``. Standard normals use
Box-Muller on consecutive uniform pairs ``(u1, u2)``::

    r = sqrt(-2 log(1 - u1));  n_even = r cos(2 pi u2);  n_odd = r sin(2 pi u2)

A request for an odd count still consumes a whole pair; the unused sine
value is discarded. Because every output is a pure function of its counter
the streams are vectorised and can be reproduced in any language.
"""

from __future__ import annotations

import numpy as np

GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


class SplitMix64:
    """Stateful SplitMix64 stream.

    >>> SplitMix64(0).next_u64(1)[0] == 0xE220A8397B1DCDAF
    True
    """

    def __init__(self, seed: int = 0):
        self.state = int(seed) % 2**64

    def next_u64(self, n: int) -> np.ndarray:
        counters = np.arange(1, n + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = np.uint64(self.state) + counters * GAMMA
            out = _mix(z)
        self.state = (self.state + n * int(GAMMA)) % 2**64
        return out

    def uniform(self, n: int) -> np.ndarray:
        return (self.next_u64(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def normal(self, n: int) -> np.ndarray:
        pairs = (n + 1) // 2
        u = self.uniform(2 * pairs)
        r = np.sqrt(-2.0 * np.log1p(-u[0::2]))
        theta = 2.0 * np.pi * u[1::2]
        out = np.empty(2 * pairs)
        out[0::2] = r * np.cos(theta)
        out[1::2] = r * np.sin(theta)
        return out[:n]


def randn(shape, seed: int = 0) -> np.ndarray:
    """Standard normal tensor filled in first-index-fastest order."""
    shape = tuple(int(d) for d in shape)
    count = int(np.prod(shape, dtype=np.int64))
    return SplitMix64(seed).normal(count).reshape(shape, order="F")
