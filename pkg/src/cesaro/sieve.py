"""Segmented sieve of Eratosthenes for prime masks and prime counts."""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

SEGMENT = 1 << 20


@lru_cache(maxsize=8)
def _base_primes(limit: int) -> np.ndarray:
    """All primes <= limit (plain sieve)."""
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    sieve = np.ones(limit + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    return np.flatnonzero(sieve).astype(np.int64)


def _primes_for(hi: int) -> np.ndarray:
    # round the base limit up so the cache is reused across nearby segments
    limit = math.isqrt(max(hi, 4)) + 1
    limit = 1 << max(limit - 1, 1).bit_length()
    return _base_primes(limit)


def prime_mask(lo: int, hi: int) -> np.ndarray:
    """Boolean mask of primality for the integers lo <= n < hi."""
    if hi <= lo:
        return np.zeros(0, dtype=bool)
    out = np.ones(hi - lo, dtype=bool)
    if lo < 2:
        out[: min(2 - lo, hi - lo)] = False
    for p in _primes_for(hi - 1).tolist():
        if p * p >= hi:
            break
        start = max(p * p, ((lo + p - 1) // p) * p)
        if start >= hi:
            continue
        out[start - lo :: p] = False
    return out


def prime_count(n: int) -> int:
    """pi(n): number of primes <= n, by segments of SEGMENT integers."""
    total = 0
    lo = 1
    while lo <= n:
        hi = min(lo + SEGMENT, n + 1)
        total += int(np.count_nonzero(prime_mask(lo, hi)))
        lo = hi
    return total


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True
