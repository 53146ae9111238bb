"""Exact arithmetic on integral Weierstrass models over the rationals."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .arith import integer_root
from .errors import NotOnCurveError, SingularModelError, TorsionError


@dataclass(frozen=True)
class WeierstrassModel:
    """y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6 with integer coefficients."""

    a1: int
    a2: int
    a3: int
    a4: int
    a6: int
    b2: int = field(init=False, repr=False)
    b4: int = field(init=False, repr=False)
    b6: int = field(init=False, repr=False)
    b8: int = field(init=False, repr=False)
    c4_inv: int = field(init=False, repr=False)
    c6_inv: int = field(init=False, repr=False)
    delta: int = field(init=False, repr=False)

    def __post_init__(self):
        for name in ("a1", "a2", "a3", "a4", "a6"):
            if not isinstance(getattr(self, name), int):
                raise TypeError(f"{name} must be an int")
        a1, a2, a3, a4, a6 = self.ainvs
        b2 = a1 * a1 + 4 * a2
        b4 = 2 * a4 + a1 * a3
        b6 = a3 * a3 + 4 * a6
        b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4
        c4 = b2 * b2 - 24 * b4
        c6 = -(b2**3) + 36 * b2 * b4 - 216 * b6
        delta = -b2 * b2 * b8 - 8 * b4**3 - 27 * b6 * b6 + 9 * b2 * b4 * b6
        if delta == 0:
            raise SingularModelError(f"model {self.ainvs} is singular (discriminant 0)")
        for name, value in (("b2", b2), ("b4", b4), ("b6", b6), ("b8", b8),
                            ("c4_inv", c4), ("c6_inv", c6), ("delta", delta)):
            object.__setattr__(self, name, value)

    @property
    def ainvs(self) -> tuple[int, int, int, int, int]:
        return (self.a1, self.a2, self.a3, self.a4, self.a6)

    def contains(self, p: RationalPoint) -> bool:
        if p.is_infinity:
            return True
        x, y = p.x, p.y
        a1, a2, a3, a4, a6 = self.ainvs
        return y * y + a1 * x * y + a3 * y == x**3 + a2 * x * x + a4 * x + a6

    def negate(self, p: RationalPoint) -> RationalPoint:
        if p.is_infinity:
            return p
        return RationalPoint(p.x, -p.y - self.a1 * p.x - self.a3)


@dataclass(frozen=True)
class RationalPoint:
    """An affine rational point, or the point at infinity when x is None."""

    x: Fraction | None
    y: Fraction | None

    def __post_init__(self):
        if (self.x is None) != (self.y is None):
            raise ValueError("both coordinates must be given, or neither")
        if self.x is not None:
            object.__setattr__(self, "x", Fraction(self.x))
            object.__setattr__(self, "y", Fraction(self.y))

    @property
    def is_infinity(self) -> bool:
        return self.x is None


INFINITY = RationalPoint(None, None)


@dataclass(frozen=True)
class PointDecomposition:
    """nP = (A/B^2, C/B^3) with B >= 1 and gcd(B, A*C) = 1."""

    n: int
    A: int
    B: int
    C: int

    def point(self) -> RationalPoint:
        return RationalPoint(Fraction(self.A, self.B**2), Fraction(self.C, self.B**3))


@dataclass(frozen=True)
class ShortModel:
    """y'^2 = x'^3 + a x'^2 + b x' + c, obtained by x' = 4x, y' = 4(2y + a1 x + a3)."""

    a: int
    b: int
    c: int

    @property
    def cubic(self) -> list[int]:
        """Coefficients of the cubic, constant term first."""
        return [self.c, self.b, self.a, 1]

    @property
    def cubic_discriminant(self) -> int:
        a, b, c = self.a, self.b, self.c
        return a * a * b * b - 4 * b**3 - 4 * a**3 * c - 27 * c * c + 18 * a * b * c

    def contains(self, p: RationalPoint) -> bool:
        if p.is_infinity:
            return True
        x = p.x
        return p.y * p.y == x**3 + self.a * x * x + self.b * x + self.c


def _check_on(m: WeierstrassModel, *points: RationalPoint) -> None:
    for p in points:
        if not m.contains(p):
            raise NotOnCurveError(f"point ({p.x}, {p.y}) is not on {m.ainvs}")


def _add_unchecked(m: WeierstrassModel, p: RationalPoint, q: RationalPoint) -> RationalPoint:
    if p.is_infinity:
        return q
    if q.is_infinity:
        return p
    a1, a2, a3, a4, a6 = m.ainvs
    x1, y1, x2, y2 = p.x, p.y, q.x, q.y
    if x1 == x2:
        if y1 + y2 + a1 * x2 + a3 == 0:
            return INFINITY
        den = 2 * y1 + a1 * x1 + a3
        lam = (3 * x1 * x1 + 2 * a2 * x1 + a4 - a1 * y1) / den
        nu = (-x1**3 + a4 * x1 + 2 * a6 - a3 * y1) / den
    else:
        lam = (y2 - y1) / (x2 - x1)
        nu = (y1 * x2 - y2 * x1) / (x2 - x1)
    x3 = lam * lam + a1 * lam - a2 - x1 - x2
    y3 = -(lam + a1) * x3 - nu - a3
    return RationalPoint(x3, y3)


def add_points(m: WeierstrassModel, p: RationalPoint, q: RationalPoint) -> RationalPoint:
    """Chord-and-tangent addition on the general Weierstrass model."""
    _check_on(m, p, q)
    return _add_unchecked(m, p, q)


def scalar_multiply(m: WeierstrassModel, p: RationalPoint, n: int) -> RationalPoint:
    """nP by left-to-right double-and-add; n = 0 gives the identity."""
    if n < 0:
        return scalar_multiply(m, m.negate(p), -n)
    _check_on(m, p)
    result = INFINITY
    for bit in bin(n)[2:]:
        result = _add_unchecked(m, result, result)
        if bit == "1":
            result = _add_unchecked(m, result, p)
    return result


def decompose_point(p: RationalPoint, n: int = 1) -> PointDecomposition:
    if p.is_infinity:
        raise TorsionError(f"{n}P is the point at infinity")
    B, exact = integer_root(p.x.denominator, 2)
    if not exact or p.y.denominator != B**3:
        raise NotOnCurveError(
            f"denominators {p.x.denominator}, {p.y.denominator} are not of the form B^2, B^3"
        )
    dec = PointDecomposition(n, p.x.numerator, B, p.y.numerator)
    assert math.gcd(dec.B, dec.A * dec.C) == 1
    return dec


def decompose(m: WeierstrassModel, p: RationalPoint, n: int) -> PointDecomposition:
    """Return (A_n, B_n, C_n) for nP."""
    if n < 1:
        raise ValueError("index must be positive")
    return decompose_point(scalar_multiply(m, p, n), n)


def to_short_model(m: WeierstrassModel, p: RationalPoint) -> tuple[ShortModel, RationalPoint]:
    _check_on(m, p)
    a1, a2, a3, a4, a6 = m.ainvs
    short = ShortModel(4 * a2 + a1 * a1, 8 * (2 * a4 + a1 * a3), 16 * (a3 * a3 + 4 * a6))
    if p.is_infinity:
        return short, p
    image = RationalPoint(4 * p.x, 4 * (2 * p.y + a1 * p.x + a3))
    assert short.contains(image)
    return short, image


def discriminant(m: WeierstrassModel) -> int:
    return m.delta
