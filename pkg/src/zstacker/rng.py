"""Deterministic pseudo-randomness for synthetic scenes.

Two primitives, both fixed-algorithm 64-bit generators so fixtures reproduce
bit-exactly on any platform:

- splitmix64: Vigna's finalizer (increment 0x9E3779B97F4A7C15, multipliers
  0xBF58476D1CE4E5B9 and 0x94D049BB133111EB), used as a stateless counter-based
  hash. Bulk randomness (noise fields, lattice values) hashes counter arrays so
  it vectorizes and never depends on evaluation order.
- Xorshift64Star: the classic xorshift64* sequential stream (shifts 12/25/27,
  multiplier 0x2545F4914F6CDD1D), used for small draws such as blob positions.

Streams are split per purpose with mix(seed, tag, ...) so every frame, octave
and layer gets an independent substream of the scene seed.
"""

from __future__ import annotations

import numpy as np

_U64 = np.uint64
_GAMMA = _U64(0x9E3779B97F4A7C15)
_M1 = _U64(0xBF58476D1CE4E5B9)
_M2 = _U64(0x94D049BB133111EB)
_XS_MULT = _U64(0x2545F4914F6CDD1D)
_INV_2_53 = float(2.0**-53)


def splitmix64(x: np.ndarray | int) -> np.ndarray:
    """splitmix64 finalizer of x + gamma; accepts scalars or uint64 arrays."""
    with np.errstate(over="ignore"):  # uint64 wraparound is the algorithm
        z = np.asarray(x, dtype=np.uint64) + _GAMMA
        z = (z ^ (z >> _U64(30))) * _M1
        z = (z ^ (z >> _U64(27))) * _M2
        return z ^ (z >> _U64(31))


def mix(*parts: int | np.ndarray) -> np.ndarray:
    """Fold parts into one 64-bit key (order-sensitive)."""
    h = np.asarray(0, dtype=np.uint64)
    for p in parts:
        h = splitmix64(h ^ np.asarray(p, dtype=np.uint64))
    return h


def unit_floats(bits: np.ndarray) -> np.ndarray:
    """Map uint64 words to float64 in [0, 1) using the top 53 bits."""
    return (bits >> _U64(11)).astype(np.float64) * _INV_2_53


def uniform_field(key: int | np.ndarray, n: int) -> np.ndarray:
    """n counter-hashed uniforms in [0, 1) for the given stream key."""
    counters = np.arange(n, dtype=np.uint64)
    return unit_floats(splitmix64(np.asarray(key, dtype=np.uint64) ^ counters))


def normal_field(key: int | np.ndarray, n: int) -> np.ndarray:
    """n counter-hashed standard normals (Box-Muller)."""
    k = np.asarray(key, dtype=np.uint64)
    counters = np.arange(n, dtype=np.uint64)
    u1 = (splitmix64(k ^ counters) >> _U64(11)).astype(np.float64)
    u1 = (u1 + 1.0) * _INV_2_53  # (0, 1], keeps log() finite
    u2 = unit_floats(splitmix64((k ^ _GAMMA) ^ counters))
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


class Xorshift64Star:
    """Sequential xorshift64* stream for small, order-dependent draws."""

    def __init__(self, seed: int) -> None:
        state = int(splitmix64(np.asarray(seed, dtype=np.uint64)))
        self._state = state if state != 0 else 0x9E3779B97F4A7C15

    def next_u64(self) -> int:
        x = self._state
        x ^= (x >> 12) & 0xFFFFFFFFFFFFFFFF
        x = (x ^ (x << 25)) & 0xFFFFFFFFFFFFFFFF
        x ^= x >> 27
        self._state = x
        return (x * 0x2545F4914F6CDD1D) & 0xFFFFFFFFFFFFFFFF

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * _INV_2_53

    def uniforms(self, n: int) -> np.ndarray:
        return np.array([self.uniform() for _ in range(n)], dtype=np.float64)

    def randint(self, lo: int, hi: int) -> int:
        """Integer in [lo, hi) by scaled uniform (hi > lo)."""
        return lo + int(self.uniform() * (hi - lo))
