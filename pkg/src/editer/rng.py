"""Deterministic counter-based random numbers for reproducible simulation.

Every draw is a pure function of a 64-bit stream key and a sample counter, so
values do not depend on call order and arbitrary index ranges can be generated
independently (and in parallel). The construction is the SplitMix64 output
function applied to an additive counter sequence, all arithmetic mod 2**64:

    child(key, i) = mix64(key + (i + 1) * PHI64)

    mix64(z):  z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9
               z ^= z >> 27;  z *= 0x94D049BB133111EB
               z ^= z >> 31

with PHI64 = 0x9E3779B97F4A7C15. Stream keys are derived by chaining child():
the stream for (tag, index) under a master seed is child(child(seed, tag),
index). child(0, n) for n = 0, 1, 2, ... reproduces the reference SplitMix64
sequence seeded with 0; test vectors are in the README and the test suite.

Uniforms take the top 53 bits: u = (child(key, n) >> 11) / 2**53 in [0, 1).
Complex normals with unit total variance use counters (2n, 2n + 1):

    z_n = sqrt(-log(u1)) * exp(2*pi*1j*u2),  u1 in (0, 1], u2 in [0, 1).
"""

from __future__ import annotations

import numpy as np

PHI64 = 0x9E3779B97F4A7C15
_MULT1 = 0xBF58476D1CE4E5B9
_MULT2 = 0x94D049BB133111EB
_MASK64 = (1 << 64) - 1
_TWO53 = float(1 << 53)


def mix64(value: int) -> int:
    """SplitMix64 output function on a Python int (mod 2**64)."""
    z = value & _MASK64
    z = ((z ^ (z >> 30)) * _MULT1) & _MASK64
    z = ((z ^ (z >> 27)) * _MULT2) & _MASK64
    return z ^ (z >> 31)


def child_key(key: int, index: int) -> int:
    """Derive a child key; also the per-counter word generator."""
    return mix64(key + (index + 1) * PHI64)


def stream_key(seed: int, tag: int, index: int) -> int:
    """Key for stream (tag, index) under a master seed."""
    return child_key(child_key(seed, tag), index)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    z = z ^ (z >> np.uint64(30))
    z = z * np.uint64(_MULT1)
    z = z ^ (z >> np.uint64(27))
    z = z * np.uint64(_MULT2)
    return z ^ (z >> np.uint64(31))


def random_words(key: int, counters: np.ndarray) -> np.ndarray:
    """Vectorized child_key(key, counters); counters wrap mod 2**64."""
    c = np.asarray(counters, dtype=np.int64).astype(np.uint64)
    z = np.uint64(key & _MASK64) + (c + np.uint64(1)) * np.uint64(PHI64)
    return _mix64_array(z)


def uniform01(key: int, counters: np.ndarray) -> np.ndarray:
    """Uniforms in [0, 1) at the given counters."""
    return (random_words(key, counters) >> np.uint64(11)).astype(np.float64) / _TWO53


def complex_normal(key: int, counters: np.ndarray) -> np.ndarray:
    """Standard complex normals (E|z|^2 = 1) at the given counters.

    Sample n consumes the uniform pair at word counters (2n, 2n+1), so
    streams of normals and streams of raw words never collide for n >= 0.
    """
    c = np.asarray(counters, dtype=np.int64)
    u1 = (random_words(key, 2 * c) >> np.uint64(11)).astype(np.float64)
    u1 = (u1 + 1.0) / _TWO53  # (0, 1], safe for log
    u2 = uniform01(key, 2 * c + 1)
    return np.sqrt(-np.log(u1)) * np.exp(2j * np.pi * u2)
