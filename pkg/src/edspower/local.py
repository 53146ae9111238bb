"""Prime ideals above an odd unramified prime via q-adic embeddings of a tower.

Dedekind's criterion needs q coprime to the index of Z[γ], which fails at
primes dividing a radicand to an even power. Here the tower is mapped
step by step into unramified local rings instead: each radicand's image is
q^(2v) times a unit; a residue square splits the branch in two, a residue
non-square extends the local ring by the square root of that unit. The
leaves of this branching are the prime ideals above q, and the valuation at
a leaf is the least q-adic valuation of the image's coordinates.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

import sympy

from . import polymod
from .arith import valuation, valuation_q
from .errors import UnsafePrimeError

_X = sympy.Symbol("x")


class LocalRing:
    """(Z/q^prec)[t]/(Φ) followed by quadratic steps s_k^2 = c_k with c_k residue non-squares."""

    def __init__(self, q: int, prec: int, phi: list[int], radicands: list[tuple[int, ...]]):
        self.q = q
        self.prec = prec
        self.mod = q**prec
        self.phi = phi
        self.f0 = len(phi) - 1
        self.radicands = radicands

    @property
    def levels(self) -> int:
        return len(self.radicands)

    @property
    def residue_degree(self) -> int:
        return self.f0 * 2**self.levels

    def size(self, k: int) -> int:
        return self.f0 * 2**k

    def reduce(self, a) -> tuple[int, ...]:
        return tuple(c % self.mod for c in a)

    def residue(self) -> LocalRing:
        return LocalRing(self.q, 1, [c % self.q for c in self.phi],
                         [tuple(c % self.q for c in r) for r in self.radicands])

    def with_radicand(self, c: tuple[int, ...]) -> LocalRing:
        return LocalRing(self.q, self.prec, self.phi, self.radicands + [c])

    def pad(self, a, k: int) -> tuple[int, ...]:
        return tuple(a) + (0,) * (self.size(k) - len(a))

    def one(self, k: int) -> tuple[int, ...]:
        return self.pad((1,), k)

    def mul(self, k: int, a, b) -> tuple[int, ...]:
        m = self.mod
        if k == 0:
            r = polymod.mulmod(list(a), list(b), self.phi, m)
            return self.pad(r, 0)
        h = self.size(k - 1)
        a0, a1, b0, b1 = a[:h], a[h:], b[:h], b[h:]
        p00 = self.mul(k - 1, a0, b0)
        p11 = self.mul(k - 1, a1, b1)
        p01 = self.mul(k - 1, a0, b1)
        p10 = self.mul(k - 1, a1, b0)
        d = self.mul(k - 1, self.radicands[k - 1], p11)
        return tuple((x + y) % m for x, y in zip(p00, d)) + tuple((x + y) % m for x, y in zip(p01, p10))

    def power(self, k: int, a, e: int) -> tuple[int, ...]:
        result = self.one(k)
        while e:
            if e & 1:
                result = self.mul(k, result, a)
            a = self.mul(k, a, a)
            e >>= 1
        return result

    def valuation(self, a) -> int:
        vals = [valuation(c, self.q) for c in a if c % self.mod]
        return min(vals) if vals else self.prec

    def is_residue_square(self, k: int, a) -> bool:
        res = self.residue()
        a = res.reduce(a)
        order = self.q ** res.size(k)
        return res.power(k, a, (order - 1) // 2) == res.one(k)

    def _residue_sqrt(self, k: int, a) -> tuple[int, ...]:
        """Tonelli-Shanks in the residue field at level k; a is a nonzero square."""
        res = self.residue()
        a = res.reduce(a)
        order = self.q ** res.size(k)
        s, t = 0, order - 1
        while t % 2 == 0:
            s, t = s + 1, t // 2
        rng = random.Random(order)
        minus_one = res.pad((self.q - 1,), k)
        while True:
            z = tuple(rng.randrange(self.q) for _ in range(res.size(k)))
            if any(z) and res.power(k, z, (order - 1) // 2) == minus_one:
                break
        m, c = s, res.power(k, z, t)
        tt, r = res.power(k, a, t), res.power(k, a, (t + 1) // 2)
        one = res.one(k)
        while tt != one:
            i, t2 = 0, tt
            while t2 != one:
                t2 = res.mul(k, t2, t2)
                i += 1
            b = res.power(k, c, 1 << (m - i - 1))
            m, c = i, res.mul(k, b, b)
            tt, r = res.mul(k, tt, c), res.mul(k, r, b)
        return r

    def inverse(self, k: int, a) -> tuple[int, ...]:
        """Inverse of a unit by Newton iteration from the residue inverse."""
        res = self.residue()
        y = res.power(k, res.reduce(a), self.q ** res.size(k) - 2)
        mod = self.q
        while mod < self.mod:
            mod = min(mod * mod, self.mod)
            ay = self.mul(k, a, y)
            y = self.mul(k, y, tuple((2 * (i == 0) - c) % self.mod for i, c in enumerate(ay)))
        return y

    def sqrt_unit(self, k: int, a) -> tuple[int, ...]:
        """Square root of a unit that is a residue square, to full precision."""
        r = self._residue_sqrt(k, a)
        y = self.inverse(k, r)
        inv2 = pow(2, -1, self.mod)
        mod = self.q
        while mod < self.mod:
            mod = min(mod * mod, self.mod)
            ay2 = self.mul(k, a, self.mul(k, y, y))
            corr = tuple(((3 * (i == 0) - c) * inv2) % self.mod for i, c in enumerate(ay2))
            y = self.mul(k, y, corr)
        return self.mul(k, a, y)


@dataclass(eq=False)
class LocalPrimeIdeal:
    """A prime ideal above an odd unramified q, given by an embedding into a local ring."""

    p: int
    f: int
    e: int
    label: str
    tower: object = field(repr=False)
    ring: LocalRing = field(repr=False)
    gen_images: list = field(repr=False)
    losses: list = field(repr=False)

    @property
    def norm(self) -> int:
        return self.p**self.f

    def __eq__(self, other):
        return isinstance(other, LocalPrimeIdeal) and self.label == other.label and self.tower is other.tower

    def __hash__(self):
        return hash(self.label)

    @property
    def precision(self) -> int:
        return self.ring.prec - sum(self.losses)

    def image(self, coords) -> tuple[int, ...]:
        """Image of an element whose coordinates are q-integral."""
        ring = self.ring
        top = ring.levels
        tower = self.tower

        def rec(k: int, c) -> tuple[int, ...]:
            if k == 0:
                acc = ring.pad((), top)
                power = ring.one(top)
                for i, x in enumerate(c):
                    if x:
                        term = tuple(int(x.numerator * pow(x.denominator, -1, ring.mod)) * y % ring.mod for y in power)
                        acc = tuple((u + v) % ring.mod for u, v in zip(acc, term))
                    if i + 1 < len(c):
                        power = ring.mul(top, power, self.gen_images[0])
                return acc
            h = tower._level_size(k - 1)
            lo = rec(k - 1, c[:h])
            if not any(c[h:]):
                return lo
            hi = ring.mul(top, rec(k - 1, c[h:]), self.gen_images[k])
            return tuple((u + v) % ring.mod for u, v in zip(lo, hi))

        return rec(tower.levels, coords)

    def valuation(self, x) -> int:
        x = self.tower.coerce(x)
        if x.is_zero():
            raise ValueError("valuation of zero is infinite")
        shift = max(valuation(c.denominator, self.p) for c in x.coords if c)
        scaled = [c * self.p**shift for c in x.coords]
        bound = valuation_q(x.norm(), self.p) + shift * self.tower.degree
        if bound >= self.precision:
            return _rebuild(self, bound + sum(self.losses) + 8).valuation(x)
        v = self.ring.valuation(self.image(scaled))
        assert v < self.precision
        return v - shift

    def divides(self, x) -> bool:
        return self.valuation(x) > 0


def _rebuild(ideal: LocalPrimeIdeal, prec: int) -> LocalPrimeIdeal:
    for fresh in local_primes(ideal.tower, ideal.p, prec):
        if fresh.label == ideal.label:
            ideal.ring, ideal.gen_images, ideal.losses = fresh.ring, fresh.gen_images, fresh.losses
            return ideal
    raise AssertionError("rebuilt local decomposition lost a prime")


def local_primes(tower, q: int, prec: int = 40) -> list[LocalPrimeIdeal]:
    """All prime ideals above the odd prime q, assuming q is unramified.

    Raises UnsafePrimeError when q is even, divides the discriminant of the
    base polynomial, or ramifies at some quadratic step.
    """
    if q == 2:
        raise UnsafePrimeError("local decomposition needs an odd prime")
    base = list(tower.base_poly)
    base_poly = sympy.Poly(list(reversed(base)), _X)
    if tower.base_degree > 1 and sympy.discriminant(base_poly) % q == 0:
        raise UnsafePrimeError(f"{q} divides the discriminant of the base polynomial")
    mod = q**prec
    branches = []
    if tower.base_degree == 1:
        ring = LocalRing(q, prec, [0, 1], [])
        branches.append((ring, [ring.pad((-base[0] % mod,), 0)], []))
    else:
        factors = sympy.Poly(list(reversed(base)), _X, modulus=q).factor_list()[1]
        phis = sorted((polymod.monic([int(c) % q for c in reversed(fac.all_coeffs())], q) for fac, _ in factors),
                      key=lambda g: (len(g), g))
        for phi in phis:
            if len(phi) == len(base):
                lifted = polymod.reduce(base, mod)
            else:
                h, r = polymod.divmod_monic(base, phi, q)
                assert not r
                lifted = polymod.hensel_lift(base, phi, h, q, prec)
            ring = LocalRing(q, prec, lifted, [])
            # Reduce t modulo φ: for a linear φ the image is a constant.
            branches.append((ring, [ring.pad(polymod.rem([0, 1], lifted, mod), 0)], []))
    for k in range(1, tower.levels + 1):
        grown = []
        for ring, images, losses in branches:
            probe = LocalPrimeIdeal(q, 0, 1, "", tower, ring, images, losses)
            delta = tower.deltas[k - 1]
            shift = max(valuation(c.denominator, q) for c in delta if c)
            full = list(delta) + [Fraction(0)] * (tower.degree - len(delta))
            img = probe.image([c * q ** (2 * ((shift + 1) // 2)) for c in full])
            v_raw = ring.valuation(img)
            if v_raw >= ring.prec - sum(losses):
                raise UnsafePrimeError("precision exhausted while embedding a radicand")
            v = v_raw - 2 * ((shift + 1) // 2)
            if v < 0:
                raise UnsafePrimeError(f"radicand {k} is not integral at {q}")
            if v % 2:
                raise UnsafePrimeError(f"{q} ramifies at step {k}")
            top = ring.levels
            unit = tuple(c // q**v_raw for c in img)
            if ring.is_residue_square(top, unit):
                root = ring.sqrt_unit(top, unit)
                for sign in (1, -1):
                    r = tuple(sign * c * q ** (v_raw // 2) % mod for c in root)
                    grown.append((ring, images + [_unshift(r, q, (shift + 1) // 2, mod)], losses + [v_raw // 2 + (shift + 1) // 2]))
            else:
                ext = ring.with_radicand(unit)
                lifted = [ext.pad(im, ext.levels) for im in images]
                s = ext.pad(ext.pad((), top) + ext.pad((1,), top), ext.levels)
                r = tuple(c * q ** (v_raw // 2) % mod for c in s)
                grown.append((ext, lifted + [_unshift(r, q, (shift + 1) // 2, mod)], losses + [v_raw // 2 + (shift + 1) // 2]))
        branches = grown
    # A split step yields two primes and an extension step one prime of twice
    # the residue degree, so the leaves are exactly the primes above q.
    ideals = [
        LocalPrimeIdeal(q, ring.residue_degree, 1, "", tower, ring, [ring.pad(im, ring.levels) for im in images], losses)
        for ring, images, losses in branches
    ]
    for i, ideal in enumerate(ideals):
        ideal.label = f"{q}.L{i}"
    assert sum(i.f for i in ideals) == tower.degree
    return ideals


def _unshift(r, q, half_shift, mod):
    """Undo the q-power used to clear radicand denominators (exact division)."""
    if half_shift == 0:
        return r
    d = q**half_shift
    assert all(c % d == 0 for c in r), "denominator shift exceeds precision"
    return tuple(c // d for c in r)

