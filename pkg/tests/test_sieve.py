import numpy as np
import pytest
import sympy

from cesaro.sieve import is_prime, prime_count, prime_mask

from oracle import primes_upto


def test_pi_million_matches_sympy():
    assert prime_count(10**6) == sympy.primepi(10**6) == 78498


@pytest.mark.parametrize("n", [0, 1, 2, 3, 10, 97, 100, 7919, 65536, 2**20 + 7])
def test_prime_count_small(n):
    assert prime_count(n) == sympy.primepi(n)


def test_segmented_mask_matches_plain_sieve():
    ref = primes_upto(5000)
    for lo, hi in [(1, 100), (2, 3), (90, 1200), (4000, 5001)]:
        got = {lo + int(i) for i in np.flatnonzero(prime_mask(lo, hi))}
        assert got == {p for p in ref if lo <= p < hi}


def test_is_prime():
    assert [n for n in range(30) if is_prime(n)] == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    assert is_prime(1_000_003) and not is_prime(1_000_001)
