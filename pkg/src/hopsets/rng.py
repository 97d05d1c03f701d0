"""Counter-based randomness.

Every random decision is a pure function of (seed, tag, counter, level), so
sampling does not depend on iteration order. A 64-bit key is derived from
(seed, tag, level) with blake2b and each counter is mixed with splitmix64.
"""
from __future__ import annotations

import hashlib

import numpy as np

_MASK = (1 << 64) - 1


def _key(seed: int, tag: str, level: int) -> int:
    h = hashlib.blake2b(f"{seed}|{tag}|{level}".encode(), digest_size=8)
    return int.from_bytes(h.digest(), "little")


def _mix(x: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer on uint64 lanes (wraparound is intended)
    with np.errstate(over="ignore"):
        x = x + np.uint64(0x9E3779B97F4A7C15)
        x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return x ^ (x >> np.uint64(31))


def uniform_array(seed: int, tag: str, counters, level: int = 0) -> np.ndarray:
    """U[0,1) values, one per counter."""
    c = np.asarray(counters, dtype=np.uint64)
    key = np.uint64(_key(seed, tag, level))
    with np.errstate(over="ignore"):
        x = _mix(c * np.uint64(0xD1B54A32D192ED03) ^ key)
        x = _mix(x ^ key)
    return (x >> np.uint64(11)).astype(np.float64) / float(1 << 53)


def uniform(seed: int, tag: str, counter: int, level: int = 0) -> float:
    return float(uniform_array(seed, tag, [counter], level)[0])


def integers(seed: int, tag: str, counters, high: int, level: int = 0) -> np.ndarray:
    """Integers in [0, high) per counter."""
    u = uniform_array(seed, tag, counters, level)
    return np.minimum((u * high).astype(np.int64), high - 1)
