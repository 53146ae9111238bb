"""Number field towers Q ⊆ F0 ⊆ F0(√δ1) ⊆ F0(√δ1, √δ2) ⊆ ... with exact arithmetic.

The base F0 is Q or Q[x]/(f) for a monic integral f. Every later step is a
quadratic extension by the square root of an element of the field below.
Elements are stored as flat coordinate tuples over the product power basis:
a level-k element is the concatenation of its two level-(k-1) halves a, b
standing for a + b·√δk.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import sympy
from sympy.polys.domains import QQ, ZZ
from sympy.polys.matrices import DomainMatrix

from . import polymod
from .arith import (
    fraction_sqrt,
    integer_root,
    is_prime,
    lcm_all,
    next_prime,
    primes_up_to,
    rational_reconstruction,
    valuation,
)
from .curve import ShortModel
from .errors import BudgetExceededError, InputError, UndecidedError, UnsafePrimeError

logger = logging.getLogger(__name__)

Coords = tuple  # tuple[Fraction, ...]

_X = sympy.Symbol("x")


def _sympy_poly(coeffs: Sequence[int]) -> sympy.Poly:
    return sympy.Poly(list(reversed([int(c) for c in coeffs])), _X, domain="ZZ")


def _det(rows: list[list[Fraction]]) -> Fraction:
    n = len(rows)
    m = [list(r) for r in rows]
    det = Fraction(1)
    for i in range(n):
        piv = next((r for r in range(i, n) if m[r][i] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != i:
            m[i], m[piv] = m[piv], m[i]
            det = -det
        det *= m[i][i]
        for r in range(i + 1, n):
            if m[r][i]:
                factor = m[r][i] / m[i][i]
                for c in range(i, n):
                    m[r][c] -= factor * m[i][c]
    return det


def _solve(rows: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction]:
    n = len(rows)
    m = [list(r) + [v] for r, v in zip(rows, rhs)]
    for i in range(n):
        piv = next((r for r in range(i, n) if m[r][i] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular system")
        m[i], m[piv] = m[piv], m[i]
        inv = 1 / m[i][i]
        m[i] = [v * inv for v in m[i]]
        for r in range(n):
            if r != i and m[r][i]:
                factor = m[r][i]
                m[r] = [a - factor * b for a, b in zip(m[r], m[i])]
    return [m[i][n] for i in range(n)]


@dataclass(frozen=True, eq=False)
class AlgebraicNumber:
    tower: FieldTower
    coords: Coords

    def __add__(self, other):
        other = self.tower.coerce(other)
        return AlgebraicNumber(self.tower, tuple(a + b for a, b in zip(self.coords, other.coords)))

    __radd__ = __add__

    def __neg__(self):
        return AlgebraicNumber(self.tower, tuple(-a for a in self.coords))

    def __sub__(self, other):
        return self + (-self.tower.coerce(other))

    def __rsub__(self, other):
        return self.tower.coerce(other) - self

    def __mul__(self, other):
        other = self.tower.coerce(other)
        k = self.tower.levels
        return AlgebraicNumber(self.tower, self.tower._mul(k, self.coords, other.coords))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self.tower.coerce(other)
        return self * other.inverse()

    def __rtruediv__(self, other):
        return self.tower.coerce(other) / self

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        result = self.tower.one
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def inverse(self) -> AlgebraicNumber:
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero")
        return AlgebraicNumber(self.tower, self.tower._inv(self.tower.levels, self.coords))

    def is_zero(self) -> bool:
        return not any(self.coords)

    def __eq__(self, other):
        try:
            other = self.tower.coerce(other)
        except (TypeError, InputError):
            return NotImplemented
        return self.coords == other.coords

    def __hash__(self):
        return hash(self.coords)

    def __repr__(self):
        return f"AlgebraicNumber({', '.join(str(c) for c in self.coords)})"

    @property
    def has_integer_coords(self) -> bool:
        return all(c.denominator == 1 for c in self.coords)

    def rational(self) -> Fraction | None:
        """The value as a rational when the element lies in Q."""
        if any(self.coords[1:]):
            return None
        return self.coords[0]

    def norm(self) -> Fraction:
        return self.tower.norm(self)


class FieldTower:
    """An explicit tower of extensions over Q.

    ``base_poly`` is monic with integer coefficients, constant term first;
    ``(0, 1)`` (the polynomial x) encodes the trivial base Q. ``deltas[k]``
    holds the coordinates of the radicand adjoined at step k+1.
    """

    def __init__(self, base_poly: Sequence[int] = (0, 1), deltas: Sequence[Coords] = (), labels=None):
        base_poly = tuple(int(c) for c in base_poly)
        if base_poly[-1] != 1 or len(base_poly) < 2:
            raise InputError("base polynomial must be monic of degree >= 1")
        self.base_poly = base_poly
        self.base_degree = len(base_poly) - 1
        self.deltas = tuple(tuple(Fraction(c) for c in d) for d in deltas)
        for k, d in enumerate(self.deltas):
            if len(d) != self.base_degree * 2**k:
                raise InputError(f"radicand {k + 1} has the wrong number of coordinates")
        self.labels: dict[str, AlgebraicNumber] = dict(labels or {})
        if self.base_degree > 1 and not _sympy_poly(base_poly).is_irreducible:
            raise InputError(f"base polynomial {base_poly} is reducible over Q")

    @classmethod
    def from_polynomial(cls, coeffs: Sequence[int]) -> FieldTower:
        return cls(coeffs)

    @property
    def levels(self) -> int:
        return len(self.deltas)

    @property
    def degree(self) -> int:
        return self.base_degree * 2**self.levels

    def step_degrees(self) -> list[int]:
        steps = [self.base_degree] if self.base_degree > 1 else []
        return steps + [2] * self.levels

    def __repr__(self):
        return f"FieldTower(base={self.base_poly}, steps={self.levels}, degree={self.degree})"

    # -- element construction -------------------------------------------------

    def element(self, coords: Iterable) -> AlgebraicNumber:
        coords = tuple(Fraction(c) for c in coords)
        if len(coords) != self.degree:
            raise InputError(f"expected {self.degree} coordinates, got {len(coords)}")
        return AlgebraicNumber(self, coords)

    def scalar(self, value) -> AlgebraicNumber:
        coords = [Fraction(0)] * self.degree
        coords[0] = Fraction(value)
        return AlgebraicNumber(self, tuple(coords))

    @cached_property
    def one(self) -> AlgebraicNumber:
        return self.scalar(1)

    @cached_property
    def zero(self) -> AlgebraicNumber:
        return self.scalar(0)

    def is_extension_of(self, other: FieldTower) -> bool:
        return (
            self.base_poly == other.base_poly
            and self.deltas[: other.levels] == other.deltas
        )

    def coerce(self, value) -> AlgebraicNumber:
        if isinstance(value, AlgebraicNumber):
            if value.tower is self:
                return value
            if self.is_extension_of(value.tower):
                pad = (Fraction(0),) * (self.degree - value.tower.degree)
                return AlgebraicNumber(self, value.coords + pad)
            raise InputError("element belongs to an unrelated tower")
        if isinstance(value, (int, Fraction)):
            return self.scalar(value)
        raise TypeError(f"cannot coerce {type(value).__name__} into a tower element")

    def generator(self, step: int) -> AlgebraicNumber:
        """Step 0 is the base generator (a root of base_poly); step k >= 1 is √δk."""
        coords = [Fraction(0)] * self.degree
        if step == 0:
            if self.base_degree == 1:
                coords[0] = Fraction(-self.base_poly[0])
            else:
                coords[1] = Fraction(1)
        else:
            coords[self.base_degree * 2 ** (step - 1)] = Fraction(1)
        return AlgebraicNumber(self, tuple(coords))

    def generators(self) -> list[AlgebraicNumber]:
        start = 0 if self.base_degree > 1 else 1
        return [self.generator(k) for k in range(start, self.levels + 1)]

    def adjoin_sqrt(self, delta) -> FieldTower:
        """New tower with √delta adjoined; delta must not be a square here."""
        delta = self.coerce(delta)
        if delta.is_zero():
            raise InputError("cannot adjoin the square root of zero")
        if self.sqrt(delta) is not None:
            raise InputError("radicand is already a square; the extension would be reducible")
        return FieldTower(self.base_poly, self.deltas + (delta.coords,))

    # -- arithmetic on coordinate tuples -------------------------------------

    def _level_size(self, k: int) -> int:
        return self.base_degree * 2**k

    def _base_mul(self, a: Coords, b: Coords) -> Coords:
        n = self.base_degree
        if n == 1:
            return (a[0] * b[0],)
        prod = [Fraction(0)] * (2 * n - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    if y:
                        prod[i + j] += x * y
        f = self.base_poly
        for i in range(2 * n - 2, n - 1, -1):
            c = prod[i]
            if c:
                for j in range(n):
                    prod[i - n + j] -= c * f[j]
        return tuple(prod[:n])

    def _base_matrix(self, a: Coords) -> list[list[Fraction]]:
        n = self.base_degree
        cols = []
        for j in range(n):
            e = [Fraction(0)] * n
            e[j] = Fraction(1)
            cols.append(self._base_mul(a, tuple(e)))
        return [[cols[j][i] for j in range(n)] for i in range(n)]

    def _mul(self, k: int, a: Coords, b: Coords) -> Coords:
        if k == 0:
            return self._base_mul(a, b)
        h = self._level_size(k - 1)
        a0, a1, b0, b1 = a[:h], a[h:], b[:h], b[h:]
        delta = self.deltas[k - 1]
        z = (Fraction(0),) * h
        p00 = self._mul(k - 1, a0, b0) if any(a0) and any(b0) else z
        p11 = self._mul(k - 1, a1, b1) if any(a1) and any(b1) else z
        p01 = self._mul(k - 1, a0, b1) if any(a0) and any(b1) else z
        p10 = self._mul(k - 1, a1, b0) if any(a1) and any(b0) else z
        d11 = self._mul(k - 1, delta, p11) if any(p11) else z
        return tuple(x + y for x, y in zip(p00, d11)) + tuple(x + y for x, y in zip(p01, p10))

    def _inv(self, k: int, a: Coords) -> Coords:
        if k == 0:
            n = self.base_degree
            if n == 1:
                return (1 / a[0],)
            rhs = [Fraction(0)] * n
            rhs[0] = Fraction(1)
            return tuple(_solve(self._base_matrix(a), rhs))
        h = self._level_size(k - 1)
        a0, a1 = a[:h], a[h:]
        rel = self._relative_norm(k, a)
        inv = self._inv(k - 1, rel)
        return self._mul(k - 1, a0, inv) + tuple(-c for c in self._mul(k - 1, a1, inv))

    def _relative_norm(self, k: int, a: Coords) -> Coords:
        """a0^2 - δk·a1^2, the norm from level k down to level k-1."""
        h = self._level_size(k - 1)
        a0, a1 = a[:h], a[h:]
        sq0 = self._mul(k - 1, a0, a0)
        if not any(a1):
            return sq0
        sq1 = self._mul(k - 1, self.deltas[k - 1], self._mul(k - 1, a1, a1))
        return tuple(x - y for x, y in zip(sq0, sq1))

    def _norm(self, k: int, a: Coords) -> Fraction:
        while k > 0:
            a = self._relative_norm(k, a)
            k -= 1
        if self.base_degree == 1:
            return a[0]
        return _det(self._base_matrix(a))

    def norm(self, x) -> Fraction:
        """Norm from the top of the tower to Q."""
        x = self.coerce(x)
        return self._norm(self.levels, x.coords)

    # -- square roots --------------------------------------------------------

    def sqrt(self, v) -> AlgebraicNumber | None:
        """A square root of v in the tower, or None when v is provably not a square.

        Every returned root is checked by exact squaring. Raises UndecidedError
        if the base-field search can neither find a root nor rule one out.
        """
        v = self.coerce(v)
        if v.is_zero():
            return self.zero
        root = self._sqrt(self.levels, v.coords)
        if root is None:
            return None
        w = AlgebraicNumber(self, root)
        if w * w != v:
            raise AssertionError("square root failed exact verification")
        return w

    def _sqrt(self, k: int, v: Coords) -> Coords | None:
        if not any(v):
            return v
        if k == 0:
            return self._base_sqrt(v)
        h = self._level_size(k - 1)
        a, b = v[:h], v[h:]
        z = (Fraction(0),) * h
        delta = self.deltas[k - 1]
        if not any(b):
            r = self._sqrt(k - 1, a)
            if r is not None:
                return r + z
            r = self._sqrt(k - 1, self._mul(k - 1, a, self._inv(k - 1, delta)))
            if r is not None:
                return z + r
            return None
        # w = c + e√δ squares to v iff c^2 = (a ± n)/2 with n^2 = a^2 - δ b^2 and e = b / 2c.
        n = self._sqrt(k - 1, self._relative_norm(k, v))
        if n is None:
            return None
        half = Fraction(1, 2)
        for sign in (1, -1):
            c2 = tuple((x + sign * y) * half for x, y in zip(a, n))
            c = self._sqrt(k - 1, c2)
            if c is None or not any(c):
                continue
            inv2c = self._inv(k - 1, tuple(2 * x for x in c))
            e = self._mul(k - 1, b, inv2c)
            return c + e
        return None

    def _base_sqrt(self, v: Coords) -> Coords | None:
        if self.base_degree == 1:
            r = fraction_sqrt(v[0])
            return None if r is None else (r,)
        return _hensel_sqrt(self.base_poly, v)

    # -- invariants via a primitive element ----------------------------------

    def multiplication_matrix(self, x) -> list[list[Fraction]]:
        x = self.coerce(x)
        cols = []
        for j in range(self.degree):
            e = [Fraction(0)] * self.degree
            e[j] = Fraction(1)
            cols.append(self._mul(self.levels, x.coords, tuple(e)))
        return [[cols[j][i] for j in range(self.degree)] for i in range(self.degree)]

    def charpoly(self, x) -> list[Fraction]:
        """Characteristic polynomial of multiplication by x, constant term first."""
        rows = self.multiplication_matrix(x)
        if all(c.denominator == 1 for r in rows for c in r):
            dm = DomainMatrix([[ZZ(int(c)) for c in r] for r in rows], (self.degree, self.degree), ZZ)
        else:
            dm = DomainMatrix([[QQ(c.numerator, c.denominator) for c in r] for r in rows],
                              (self.degree, self.degree), QQ)
        coeffs = dm.charpoly()
        return [Fraction(int(QQ.numer(c)) if dm.domain == QQ else int(c),
                         int(QQ.denom(c)) if dm.domain == QQ else 1) for c in reversed(coeffs)]

    def is_algebraic_integer(self, x) -> bool:
        return all(c.denominator == 1 for c in self.charpoly(x))

    @cached_property
    def _primitive(self) -> tuple[AlgebraicNumber, tuple[int, ...]]:
        gens = self.generators()
        if not gens:
            return self.zero, (0, 1)
        attempts = [[1] * len(gens), list(range(1, len(gens) + 1))]
        attempts += [[1 + (i * j) % 5 for i in range(1, len(gens) + 1)] for j in range(2, 12)]
        for coeffs in attempts:
            gamma = self.zero
            for c, g in zip(coeffs, gens):
                gamma = gamma + c * g
            poly = self.charpoly(gamma)
            assert all(c.denominator == 1 for c in poly), "generators are integral"
            ints = tuple(int(c) for c in poly)
            if _sympy_poly(ints).is_sqf:
                return gamma, ints
        raise BudgetExceededError("no primitive element found among small combinations")

    @property
    def primitive_element(self) -> AlgebraicNumber:
        return self._primitive[0]

    @property
    def minpoly(self) -> tuple[int, ...]:
        """Minimal polynomial of the primitive element, constant term first."""
        return self._primitive[1]

    @cached_property
    def disc_multiple(self) -> int:
        """Discriminant of the equation order Z[γ]; a multiple of the field discriminant."""
        if self.degree == 1:
            return 1
        return int(sympy.discriminant(_sympy_poly(self.minpoly)))

    @cached_property
    def signature(self) -> tuple[int, int]:
        if self.degree == 1:
            return 1, 0
        r1 = int(_sympy_poly(self.minpoly).count_roots())
        return r1, (self.degree - r1) // 2

    @property
    def totally_real(self) -> bool:
        return self.signature[1] == 0

    @cached_property
    def _gamma_basis_inverse(self) -> DomainMatrix:
        d = self.degree
        gamma = self.primitive_element
        powers = [self.one]
        for _ in range(d - 1):
            powers.append(powers[-1] * gamma)
        rows = [[QQ(powers[j].coords[i].numerator, powers[j].coords[i].denominator) for j in range(d)]
                for i in range(d)]
        return DomainMatrix(rows, (d, d), QQ).inv()

    def to_gamma_coords(self, x) -> list[Fraction]:
        """Coordinates of x on the basis 1, γ, ..., γ^(d-1)."""
        x = self.coerce(x)
        inv = self._gamma_basis_inverse
        col = DomainMatrix([[QQ(c.numerator, c.denominator)] for c in x.coords], (self.degree, 1), QQ)
        out = (inv * col).to_Matrix()
        return [Fraction(int(sympy.fraction(c)[0]), int(sympy.fraction(c)[1])) for c in out]

    def split_prime(self, p: int) -> list[PrimeIdealData]:
        """Prime ideals above p, for p not dividing disc_multiple."""
        if not is_prime(p):
            raise InputError(f"{p} is not prime")
        if self.disc_multiple % p == 0:
            raise UnsafePrimeError(f"{p} divides the equation-order discriminant")
        f = list(self.minpoly)
        factors = sympy.Poly(list(reversed(f)), _X, modulus=p).factor_list()[1]
        ideals = []
        for fac, mult in factors:
            assert mult == 1
            phi = polymod.monic([int(c) % p for c in reversed(fac.all_coeffs())], p)
            ideals.append(phi)
        ideals.sort(key=lambda g: (len(g), g))
        if not ideals:
            ideals = [[0, 1]]  # degree-one tower, minpoly x
        return [PrimeIdealData(p, len(phi) - 1, 1, f"{p}.{i}", self, tuple(phi)) for i, phi in enumerate(ideals)]

    def primes_above(self, p: int) -> list:
        """Prime ideals above p: Dedekind splitting when safe, else local embeddings.

        The local route covers odd primes that divide the index of Z[γ] but do
        not ramify; it raises UnsafePrimeError otherwise.
        """
        from .local import local_primes

        try:
            return self.split_prime(p)
        except UnsafePrimeError:
            return local_primes(self, p)

    def prime_above(self, p: int) -> PrimeIdealData:
        """A deterministic choice of prime ideal over p (smallest residue degree first)."""
        return self.split_prime(p)[0]

    # -- reporting ---------------------------------------------------------

    def summary(self) -> dict:
        r1, s = self.signature
        out = {
            "degree": self.degree,
            "base_polynomial": [str(c) for c in self.base_poly],
            "radicands": [[str(c) for c in d] for d in self.deltas],
            "step_degrees": self.step_degrees(),
            "signature": [r1, s],
            "totally_real": self.totally_real,
            "primitive_minpoly": [str(c) for c in self.minpoly],
            "disc_multiple": str(self.disc_multiple),
            "labels": {k: [str(c) for c in v.coords] for k, v in sorted(self.labels.items())},
        }
        return out


@dataclass(eq=False)
class PrimeIdealData:
    """An unramified prime ideal (p, φ(γ)) of a tower, with a valuation oracle."""

    p: int
    f: int
    e: int
    label: str
    tower: FieldTower = field(repr=False)
    phi: tuple[int, ...] = field(repr=False)
    _lifts: dict = field(default_factory=dict, repr=False)

    @property
    def norm(self) -> int:
        return self.p**self.f

    def __eq__(self, other):
        return isinstance(other, PrimeIdealData) and (self.label, self.phi) == (other.label, other.phi)

    def __hash__(self):
        return hash((self.label, self.phi))

    def _lift(self, k: int) -> list[int]:
        if k not in self._lifts:
            f = list(self.tower.minpoly)
            g = list(self.phi)
            h, r = polymod.divmod_monic(f, g, self.p)
            assert not r
            self._lifts[k] = polymod.hensel_lift(f, g, h, self.p, k) if h else g
        return self._lifts[k]

    def valuation(self, x) -> int:
        x = self.tower.coerce(x)
        if x.is_zero():
            raise ValueError("valuation of zero is infinite")
        if self.tower.degree == 1:
            c = x.coords[0]
            return valuation(c.numerator, self.p) - valuation(c.denominator, self.p)
        coords = self.tower.to_gamma_coords(x)
        den = lcm_all(c.denominator for c in coords)
        h = [int(c * den) for c in coords]
        nrm = abs(self.tower.norm(x) * den**self.tower.degree)
        assert nrm.denominator == 1
        k = valuation(int(nrm), self.p) // self.f + 1
        mod = self.p**k
        r = polymod.rem([c % mod for c in h], self._lift(k), mod)
        v = min(valuation(c, self.p) for c in r if c)
        assert v < k
        return v - valuation(den, self.p)

    def divides(self, x) -> bool:
        return self.valuation(x) > 0


# -- Hensel square roots in the base field -------------------------------------


def _hensel_sqrt(f: tuple[int, ...], v: Coords, max_primes: int = 200) -> Coords | None:
    """Square root in Q[x]/(f), or None if v is provably not a square.

    Each unramified prime p gives residue fields F_p[x]/(φ) for the factors φ
    of f mod p; a non-residue in any of them disproves squareness. At an inert
    prime the residue root is Newton-lifted and rationally reconstructed.
    """
    n = len(f) - 1
    den = lcm_all(c.denominator for c in v)
    vi = [int(c * den * den) for c in v]
    # A square has a square norm.
    nrm = _det(_base_matrix_int(f, vi))
    if nrm < 0 or not integer_root(int(nrm.numerator), 2)[1]:
        return None
    disc = int(sympy.discriminant(_sympy_poly(f)))
    height = max(abs(c).bit_length() for c in vi)
    cap_bits = 2 * height + 4 * abs(disc).bit_length() + 256
    p = 1000
    for _ in range(max_primes):
        p = next_prime(p)
        if disc % p == 0:
            continue
        factors = sympy.Poly(list(reversed(f)), _X, modulus=p).factor_list()[1]
        residues = []
        for fac, _mult in factors:
            phi = polymod.monic([int(c) % p for c in reversed(fac.all_coeffs())], p)
            vp = polymod.rem(vi, phi, p)
            if vp:
                residues.append((phi, vp))
                q = p ** (len(phi) - 1)
                if polymod.powmod(vp, (q - 1) // 2, phi, p) != [1]:
                    return None
        if len(factors) != 1 or len(residues) != 1:
            continue
        r = _sqrt_finite_field(residues[0][1], list(f), p, p**n)
        root = _lift_and_reconstruct(vi, r, list(f), p, cap_bits)
        if root is not None:
            return tuple(c / den for c in root)
        logger.debug("reconstruction failed at p=%d, trying another prime", p)
    raise UndecidedError(f"square root search in Q[x]/{f} exhausted {max_primes} primes")


def _base_matrix_int(f, v) -> list[list[Fraction]]:
    tower = FieldTower.__new__(FieldTower)
    tower.base_poly = tuple(f)
    tower.base_degree = len(f) - 1
    return tower._base_matrix(tuple(Fraction(c) for c in v))


def _sqrt_finite_field(a: list[int], f: list[int], p: int, q: int) -> list[int]:
    """Tonelli-Shanks in F_p[x]/(f) with q elements; a is a nonzero square."""
    s, t = 0, q - 1
    while t % 2 == 0:
        s, t = s + 1, t // 2
    z = [2]
    shift = 0
    while polymod.powmod(z, (q - 1) // 2, f, p) != [p - 1]:
        shift += 1
        z = polymod.reduce([shift % p, 1 + shift // p], p) if shift else [3]
    m = s
    c = polymod.powmod(z, t, f, p)
    tt = polymod.powmod(a, t, f, p)
    r = polymod.powmod(a, (t + 1) // 2, f, p)
    while tt != [1]:
        i, t2 = 0, tt
        while t2 != [1]:
            t2 = polymod.mulmod(t2, t2, f, p)
            i += 1
        b = polymod.powmod(c, 1 << (m - i - 1), f, p)
        m = i
        c = polymod.mulmod(b, b, f, p)
        tt = polymod.mulmod(tt, c, f, p)
        r = polymod.mulmod(r, b, f, p)
    return r


def _lift_and_reconstruct(v: list[int], r: list[int], f: list[int], p: int, cap_bits: int):
    """Newton-lift an inverse square root of v from r, reconstruct, verify."""
    y = polymod.inverse_mod_p(r, f, p)
    mod = p
    while True:
        mod = mod * mod
        inv2 = pow(2, -1, mod)
        # y <- y (3 - v y^2) / 2 converges to v^(-1/2)
        vy2 = polymod.mulmod(v, polymod.mulmod(y, y, f, mod), f, mod)
        y = polymod.mulmod(y, polymod.scale(polymod.sub([3], vy2, mod), inv2, mod), f, mod)
        w = polymod.mulmod(v, y, f, mod)
        w = w + [0] * (len(f) - 1 - len(w))
        coords = [rational_reconstruction(c, mod) for c in w]
        if all(c is not None for c in coords):
            den = lcm_all(c.denominator for c in coords)
            cand = [int(c * den) for c in coords]
            sq = _int_base_mul(f, cand, cand)
            if all(sq[i] == v[i] * den * den for i in range(len(f) - 1)):
                return [Fraction(c, den) for c in cand]
        if mod.bit_length() > cap_bits:
            return None


def _int_base_mul(f, a, b):
    n = len(f) - 1
    prod = [0] * (2 * n - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            prod[i + j] += x * y
    for i in range(2 * n - 2, n - 1, -1):
        c = prod[i]
        if c:
            for j in range(n):
                prod[i - n + j] -= c * f[j]
    return prod[:n]


# -- building the tower L from a point on the short model ----------------------


def _rational_roots(cubic: Sequence[int]) -> list[Fraction]:
    poly = _sympy_poly(cubic)
    roots = []
    for fac, _ in poly.factor_list()[1]:
        if fac.degree() == 1:
            c1, c0 = fac.all_coeffs()
            roots.append(Fraction(-int(c0), int(c1)))
    return sorted(roots)


def totally_real_conditions(short: ShortModel, xP: Fraction) -> bool:
    """Three real roots and xP at least every root: the totally-real criterion."""
    if short.cubic_discriminant <= 0:
        return False
    poly = _sympy_poly(short.cubic)
    above = int(poly.count_roots(sympy.Rational(xP.numerator, xP.denominator), None))
    on = poly.eval(sympy.Rational(xP.numerator, xP.denominator)) == 0
    return above - (1 if on else 0) == 0


def build_tower(short: ShortModel, xP, yP) -> FieldTower:
    """Construct L = K(√(xP − θi)) with K the splitting field of the short cubic.

    Labels bound on the result: theta1..3, sqrt1..3 (square roots of
    D²(xP − θi) for the scale D recorded under ``x_scale``), and sqrt_disc.
    """
    xP, yP = Fraction(xP), Fraction(yP)
    if short.cubic_discriminant == 0:
        raise InputError("the short cubic is not squarefree")
    if yP * yP != xP**3 + short.a * xP * xP + short.b * xP + short.c:
        raise InputError("point is not on the short model")
    if yP == 0:
        raise InputError("point has order 2")
    a, b = short.a, short.b
    roots = _rational_roots(short.cubic)
    if roots:
        tower = FieldTower()
        theta1 = tower.scalar(roots[0])
    else:
        tower = FieldTower(short.cubic)
        theta1 = tower.generator(0)
    disc = short.cubic_discriminant
    s = tower.sqrt(disc)
    if s is None:
        tower = tower.adjoin_sqrt(disc)
        s = tower.generator(tower.levels)
    theta1 = tower.coerce(theta1)
    dg = 3 * theta1 * theta1 + 2 * a * theta1 + b
    diff = s / dg
    theta2 = (-(a + theta1) + diff) / 2
    theta3 = (-(a + theta1) - diff) / 2
    for t in (theta1, theta2, theta3):
        assert t**3 + a * t * t + b * t + short.c == 0

    den = xP.denominator
    root, exact = integer_root(den, 2)
    scale = root if exact else den
    thetas = [theta1, theta2, theta3]
    roots_ = []
    for t in thetas[:2]:
        delta = tower.coerce(scale * scale * xP) - t * (scale * scale)
        r = tower.sqrt(delta)
        if r is None:
            tower = tower.adjoin_sqrt(delta)
            r = tower.generator(tower.levels)
        roots_.append(r)
    roots_ = [tower.coerce(r) for r in roots_]
    thetas = [tower.coerce(t) for t in thetas]
    r3 = tower.coerce(yP * scale**3) / (roots_[0] * roots_[1])
    assert r3 * r3 == tower.coerce(scale * scale * xP) - thetas[2] * (scale * scale)
    roots_.append(r3)
    tower.labels.update({f"theta{i + 1}": t for i, t in enumerate(thetas)})
    tower.labels.update({f"sqrt{i + 1}": r for i, r in enumerate(roots_)})
    tower.labels["sqrt_disc"] = tower.coerce(s)
    tower.labels["x_scale"] = tower.scalar(scale)
    return tower


# -- Minkowski bound -------------------------------------------------------------

PI_LOWER = Fraction(333, 106)
PI_UPPER = Fraction(355, 113)


@dataclass
class MinkowskiData:
    M_upper: Fraction
    M_float: float
    s: int
    d: int
    disc: int
    T: list
    unsafe_primes: list[int]

    def summary(self) -> dict:
        return {
            "M_L_upper": str(self.M_upper),
            "M_L": self.M_float,
            "d": self.d,
            "s": self.s,
            "disc_multiple": str(self.disc),
            "T": [q.label for q in self.T],
            "unsafe_primes_below_bound": self.unsafe_primes,
        }


def _below_minkowski(norm: int, disc: int, d: int, s: int) -> bool:
    """N < |Δ|^(1/2) (4/π)^s d!/d^d, tested with π rounded down so no ideal is missed."""
    lhs = Fraction(norm * norm) * PI_LOWER ** (2 * s) * d ** (2 * d)
    rhs = abs(disc) * 16**s * math.factorial(d) ** 2
    return lhs < rhs


def minkowski_T(tower: FieldTower, max_bound: int = 10**6) -> MinkowskiData:
    d = tower.degree
    _, s = tower.signature
    disc = tower.disc_multiple
    digits = 30
    sqrt_up = Fraction(math.isqrt(abs(disc) * 10 ** (2 * digits)) + 1, 10**digits)
    m_upper = sqrt_up * (4 / PI_LOWER) ** s * Fraction(math.factorial(d), d**d)
    if m_upper > max_bound:
        log10 = (math.log(abs(disc)) / 2 + s * math.log(4 / math.pi) + math.lgamma(d + 1) - d * math.log(d)) / math.log(10)
        raise BudgetExceededError(f"Minkowski bound about 10^{log10:.1f} exceeds enumeration budget {max_bound}")
    m_float = math.sqrt(abs(disc)) * (4 / math.pi) ** s * math.factorial(d) / d**d
    ideals = []
    unsafe = []
    for p in primes_up_to(int(m_upper)):
        if not _below_minkowski(p, disc, d, s):
            continue
        if disc % p == 0:
            unsafe.append(p)
            continue
        ideals.extend(q for q in tower.split_prime(p) if _below_minkowski(q.norm, disc, d, s))
    return MinkowskiData(m_upper, m_float, s, d, disc, ideals, unsafe)
