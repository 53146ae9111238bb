"""Integer utilities shared by the sequence and field code."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterator

import gmpy2

from .errors import BudgetExceededError

DEFAULT_TRIAL_BOUND = 10**5


def valuation(n: int, p: int) -> int:
    """Exponent of the prime ``p`` in the nonzero integer ``n``."""
    if n == 0:
        raise ValueError("valuation of zero is infinite")
    n = abs(n)
    v = 0
    # Square the divisor to strip large powers quickly.
    while n % p == 0:
        pk, k = p, 1
        while n % (pk * pk) == 0:
            pk, k = pk * pk, 2 * k
        n //= pk
        v += k
    return v


def valuation_q(x: Fraction, p: int) -> int:
    return valuation(x.numerator, p) - valuation(x.denominator, p)


def is_prime(n: int) -> bool:
    return n >= 2 and bool(gmpy2.is_prime(n, 40))


def next_prime(n: int) -> int:
    return int(gmpy2.next_prime(n))


def primes_up_to(bound: int) -> Iterator[int]:
    """Primes p with p <= bound, in increasing order."""
    if bound < 2:
        return
    sieve = bytearray([1]) * (bound + 1)
    sieve[0] = sieve[1] = 0
    for i in range(2, math.isqrt(bound) + 1):
        if sieve[i]:
            sieve[i * i :: i] = bytearray(len(range(i * i, bound + 1, i)))
    for i, flag in enumerate(sieve):
        if flag:
            yield i


def strip_coprime_part(n: int, against: int) -> int:
    """Divide out of ``n`` every prime that also divides ``against``."""
    n = abs(n)
    g = math.gcd(n, against)
    while g > 1:
        while n % g == 0:
            n //= g
        g = math.gcd(n, g)
    return n


def prime_factors(n: int, trial_bound: int = DEFAULT_TRIAL_BOUND) -> tuple[dict[int, int], int]:
    """Factor ``n`` by trial division up to ``trial_bound``.

    Returns ``(factors, cofactor)``. A cofactor that is a probable prime is
    moved into ``factors``; anything left over is returned unfactored (1 when
    the factorization is complete).
    """
    n = abs(n)
    if n == 0:
        raise ValueError("cannot factor zero")
    factors: dict[int, int] = {}
    for p in (2, 3):
        if n % p == 0:
            factors[p] = valuation(n, p)
            n //= p ** factors[p]
    d = 5
    step = 2
    while d <= trial_bound and d * d <= n:
        if n % d == 0:
            factors[d] = valuation(n, d)
            n //= d ** factors[d]
        d += step
        step = 6 - step
    if n > 1 and (d * d > n or is_prime(n)):
        factors[n] = factors.get(n, 0) + 1
        n = 1
    return factors, n


def some_prime_factor_outside(n: int, excluded: set[int], trial_bound: int = DEFAULT_TRIAL_BOUND) -> int:
    """Smallest prime factor of ``n`` not in ``excluded``, within the budget."""
    rest = n
    for q in excluded:
        if rest % q == 0:
            rest //= q ** valuation(rest, q)
    if rest == 1:
        raise ValueError("every prime factor lies in the excluded set")
    # Stop at the first hit: a primality test on a huge cofactor is the slow part.
    for d in primes_up_to(min(trial_bound, math.isqrt(rest))):
        if rest % d == 0 and d not in excluded:
            return d
    if rest > 1 and rest not in excluded and is_prime(rest):
        return rest
    raise BudgetExceededError(
        f"no prime factor of {n} outside {sorted(excluded)} found by trial division to {trial_bound}"
        f" (unfactored part has {rest.bit_length()} bits)"
    )


def integer_root(n: int, k: int) -> tuple[int, bool]:
    root, exact = gmpy2.iroot(n, k)
    return int(root), bool(exact)


def perfect_power_decomposition(n: int) -> tuple[int, int]:
    """Return ``(u, k)`` with ``n == u**k`` and ``k`` maximal.

    ``k == 1`` means ``n`` is not a perfect power. ``n == 1`` is a power with
    every exponent; it is reported as ``(1, 0)``.
    """
    if n < 1:
        raise ValueError("perfect_power_decomposition needs n >= 1")
    if n == 1:
        return 1, 0
    u, k = n, 1
    changed = True
    while changed and u > 1:
        changed = False
        for ell in primes_up_to(u.bit_length()):
            root, exact = integer_root(u, ell)
            if exact:
                u, k = root, k * ell
                changed = True
                break
    return u, k


def rational_reconstruction(a: int, m: int) -> Fraction | None:
    """Find r/s == a (mod m) with |r|, |s| <= sqrt(m/2), or None."""
    a %= m
    bound = math.isqrt(m // 2)
    r0, r1 = m, a
    s0, s1 = 0, 1
    while r1 > bound:
        q = r0 // r1
        r0, r1 = r1, r0 - q * r1
        s0, s1 = s1, s0 - q * s1
    if s1 == 0 or abs(s1) > bound or math.gcd(r1, s1) != 1:
        return None
    return Fraction(r1, s1)


def fraction_sqrt(x: Fraction) -> Fraction | None:
    """Exact square root of a nonnegative rational, or None."""
    if x < 0:
        return None
    rn, en = integer_root(x.numerator, 2)
    rd, ed = integer_root(x.denominator, 2)
    if en and ed:
        return Fraction(rn, rd)
    return None


def lcm_all(values) -> int:
    out = 1
    for v in values:
        out = out * v // math.gcd(out, v)
    return out
