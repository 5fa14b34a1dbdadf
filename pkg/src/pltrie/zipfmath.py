"""Exact partial sums of power-law weights.

The rank-j weight of a Zipf law with exponent alpha is j**-alpha.  For integer
alpha the partial sums are exact rationals; we carry them as unreduced
numerator/denominator pairs built by divide-and-conquer over gmpy2 integers,
which stays fast even at n = 10**6 where the reduced denominator alone has
hundreds of thousands of digits.  Non-integer exponents fall back to floats.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import gmpy2


def is_integral(alpha) -> bool:
    """True when alpha is an exact nonnegative integer value."""
    if isinstance(alpha, int):
        return alpha >= 0
    if isinstance(alpha, Fraction):
        return alpha.denominator == 1 and alpha >= 0
    if isinstance(alpha, float):
        return alpha.is_integer() and alpha >= 0
    return False


def _pair(a: int, b: int, alpha: int):
    # sum_{j=a}^{b} 1/j**alpha as an unreduced (num, den) pair
    if a == b:
        return gmpy2.mpz(1), gmpy2.mpz(a) ** alpha
    mid = (a + b) // 2
    n1, d1 = _pair(a, mid, alpha)
    n2, d2 = _pair(mid + 1, b, alpha)
    return n1 * d2 + n2 * d1, d1 * d2


@lru_cache(maxsize=64)
def power_sum_pair(n: int, alpha: int):
    """Unreduced (num, den) of sum_{j=1}^{n} j**-alpha, exact integers."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if alpha == 0:
        return gmpy2.mpz(n), gmpy2.mpz(1)
    return _pair(1, n, alpha)


def power_partial_sum(n: int, alpha) -> Fraction:
    """Exact sum_{j=1}^{n} j**-alpha for integral alpha.

    Reduces the pair, so cost grows quickly with n; intended for n up to a
    few tens of thousands.  Use power_sum_pair / pair_ratio beyond that.
    """
    if not is_integral(alpha):
        raise ValueError("exact partial sums need an integer exponent")
    num, den = power_sum_pair(n, int(alpha))
    return Fraction(int(num), int(den))


def pair_ratio(num_a, den_a, num_b, den_b) -> float:
    """Float value of (num_a/den_a) / (num_b/den_b) without reducing.

    Stays in gmpy2 throughout: the unreduced operands can run to millions of
    digits, where GMP's division is fast and Python's is quadratic.
    """
    num = gmpy2.mpz(num_a) * gmpy2.mpz(den_b)
    den = gmpy2.mpz(den_a) * gmpy2.mpz(num_b)
    return float((num << 64) // den) / float(1 << 64)


def power_sum_float(n: int, alpha: float) -> float:
    """sum_{j=1}^{n} j**-alpha in correctly rounded float summation."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return math.fsum(j ** -alpha for j in range(1, n + 1))
