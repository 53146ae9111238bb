"""Dense integer polynomials modulo m, constant term first.

Only what the field code needs: products and remainders by monic
polynomials, extended gcd over F_p, and Hensel lifting of a coprime
factorization.
"""

from __future__ import annotations

Poly = list[int]


def trim(a: Poly) -> Poly:
    while a and a[-1] == 0:
        a.pop()
    return a


def reduce(a: Poly, m: int) -> Poly:
    return trim([c % m for c in a])


def add(a: Poly, b: Poly, m: int) -> Poly:
    n = max(len(a), len(b))
    return trim([((a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0)) % m for i in range(n)])


def sub(a: Poly, b: Poly, m: int) -> Poly:
    n = max(len(a), len(b))
    return trim([((a[i] if i < len(a) else 0) - (b[i] if i < len(b) else 0)) % m for i in range(n)])


def scale(a: Poly, c: int, m: int) -> Poly:
    return trim([x * c % m for x in a])


def mul(a: Poly, b: Poly, m: int) -> Poly:
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return reduce(out, m)


def divmod_monic(a: Poly, b: Poly, m: int) -> tuple[Poly, Poly]:
    """Quotient and remainder of a by a monic b, coefficients mod m."""
    a = reduce(list(a), m)
    db = len(b) - 1
    if len(a) <= db:
        return [], a
    q = [0] * (len(a) - db)
    for i in range(len(a) - 1, db - 1, -1):
        c = a[i] % m
        if c:
            q[i - db] = c
            for j in range(db + 1):
                a[i - db + j] -= c * b[j]
        a[i] = 0
    return trim(q), reduce(a[:db], m)


def rem(a: Poly, b: Poly, m: int) -> Poly:
    return divmod_monic(a, b, m)[1]


def mulmod(a: Poly, b: Poly, f: Poly, m: int) -> Poly:
    return rem(mul(a, b, m), f, m)


def powmod(a: Poly, e: int, f: Poly, m: int) -> Poly:
    result: Poly = [1 % m]
    base = rem(a, f, m)
    while e:
        if e & 1:
            result = mulmod(result, base, f, m)
        base = mulmod(base, base, f, m)
        e >>= 1
    return trim(result)


def monic(a: Poly, p: int) -> Poly:
    inv = pow(a[-1], -1, p)
    return scale(a, inv, p)


def xgcd(a: Poly, b: Poly, p: int) -> tuple[Poly, Poly, Poly]:
    """(g, s, t) with s*a + t*b = g monic, over F_p."""
    r0, r1 = reduce(list(a), p), reduce(list(b), p)
    s0, s1, t0, t1 = [1], [], [], [1]
    while r1:
        inv = pow(r1[-1], -1, p)
        q, r = divmod_monic(scale(r0, inv, p), scale(r1, inv, p), p)
        # r0 = q*r1 + r*lc(r1) after undoing the scaling
        r = scale(r, r1[-1], p)
        r0, r1 = r1, r
        s0, s1 = s1, sub(s0, mul(q, s1, p), p)
        t0, t1 = t1, sub(t0, mul(q, t1, p), p)
    inv = pow(r0[-1], -1, p)
    return scale(r0, inv, p), scale(s0, inv, p), scale(t0, inv, p)


def inverse_mod_p(a: Poly, f: Poly, p: int) -> Poly:
    g, s, _ = xgcd(a, f, p)
    if g != [1]:
        raise ZeroDivisionError("element is not invertible modulo (p, f)")
    return rem(s, f, p)


def hensel_lift(f: Poly, g: Poly, h: Poly, p: int, k: int) -> Poly:
    """Lift a monic factor g of f (f = g*h mod p, gcd(g, h) = 1) to modulus p^k.

    Linear lifting, one power of p per step. f must be monic over Z.
    """
    _, s, t = xgcd(g, h, p)
    g = reduce(list(g), p)
    h = reduce(list(h), p)
    pk = p
    for _ in range(1, k):
        pk1 = pk * p
        e = sub(f, mul(g, h, pk1), pk1)
        e = [c // pk % p for c in e]
        trim(e)
        # s*g + t*h = 1, so e = (e*t mod g)*h + (rest)*g with deg(g1) < deg(g).
        g1 = rem(mul(e, t, p), g, p)
        h1, r = divmod_monic(sub(e, mul(g1, h, p), p), g, p)
        assert not r
        g = add(g, scale(g1, pk, pk1), pk1)
        h = add(h, scale(h1, pk, pk1), pk1)
        pk = pk1
    return g
