"""Bounding the exponent: the κ′ threshold, candidate levels and eigenform congruences."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import sympy

from .arith import DEFAULT_TRIAL_BOUND, prime_factors
from .eds import KappaCertificate
from .errors import ConfigurationError, DataError, IncompleteReportError, UnsafePrimeError

_X = sympy.Symbol("x")

Level = dict  # prime-ideal label -> exponent, zero exponents omitted


@dataclass(frozen=True)
class BoundConfig:
    C_L: int
    assume_modularity: bool = True
    kappa1: int | None = None
    max_levels: int = 100_000

    def __post_init__(self):
        if not isinstance(self.C_L, int) or self.C_L < 1:
            raise ConfigurationError("C_L must be a positive integer")
        if not self.assume_modularity and self.kappa1 is None:
            raise ConfigurationError("kappa1 is required when modularity is not assumed")
        if self.kappa1 is not None and self.kappa1 < 0:
            raise ConfigurationError("kappa1 must be non-negative")

    @property
    def effective_kappa1(self) -> int:
        return 0 if self.assume_modularity else self.kappa1


@dataclass(frozen=True)
class EigenformData:
    label: str
    hecke_poly: tuple[int, ...]
    level: tuple[tuple[str, int], ...]
    ap: dict = field(hash=False, compare=False)  # label -> (norm, coords)

    @classmethod
    def from_json(cls, obj: dict) -> EigenformData:
        try:
            poly = tuple(int(c) for c in obj["hecke_poly"])
            level = tuple(sorted((str(e["prime"]), int(e["exp"])) for e in obj["level"] if int(e["exp"])))
            ap = {str(e["prime"]): (int(e["norm"]), tuple(Fraction(c) for c in e["coords"])) for e in obj["ap"]}
            label = str(obj["label"])
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed eigenform record: {exc}") from exc
        if len(poly) < 2 or poly[-1] == 0:
            raise DataError(f"form {label}: Hecke polynomial must have positive degree")
        for key, (_, coords) in ap.items():
            if len(coords) != len(poly) - 1:
                raise DataError(f"form {label}: a_{key} has {len(coords)} coordinates, expected {len(poly) - 1}")
        return cls(label, poly, level, ap)

    @property
    def degree(self) -> int:
        return len(self.hecke_poly) - 1

    def level_key(self) -> tuple[tuple[str, int], ...]:
        return self.level

    def ramanujan_violations(self) -> list[str]:
        """Labels whose a_q has an embedding above 2√N(q), checked numerically with slack."""
        roots = sympy.Poly(list(reversed(self.hecke_poly)), _X).nroots(n=30)
        bad = []
        for key, (norm, coords) in sorted(self.ap.items()):
            for r in roots:
                value = sum(complex(c) * complex(r) ** i for i, c in enumerate(coords))
                if abs(value) > 2 * math.sqrt(norm) * (1 + 1e-12):
                    bad.append(key)
                    break
        return bad


@dataclass(frozen=True)
class LevelRecipe:
    conductor: dict
    M: dict
    N: dict


def level_recipe(conductor: dict, delta_vals: dict, ell: int) -> LevelRecipe:
    """Split the conductor into the part removed by level lowering and the rest."""
    if any(e < 1 for e in conductor.values()):
        raise ConfigurationError("conductor exponents must be at least 1")
    M = {q: 1 for q, e in conductor.items() if e == 1 and delta_vals.get(q, 0) % ell == 0}
    N = {q: e - M.get(q, 0) for q, e in conductor.items() if e - M.get(q, 0) > 0}
    return LevelRecipe(dict(conductor), M, N)


def conductor_exponent_cap(degree: int) -> int:
    return 2 + 6 * degree


def conductor_exponent_bound(tower, prime_q) -> int:
    """2 + 3 v_q(3) + 6 v_q(2), bounded by 2 + 6[L:Q].

    ``prime_q`` is a prime ideal (with ``p`` and ``e``) or a bare rational
    prime, in which case the ramification index is bounded by the degree.
    """
    if isinstance(prime_q, int):
        p, e = prime_q, tower.degree
    else:
        p, e = prime_q.p, prime_q.e
    value = 2 + 3 * (e if p == 3 else 0) + 6 * (e if p == 2 else 0)
    return min(value, conductor_exponent_cap(tower.degree))


def support_ideals(support) -> list[tuple[str, int]]:
    """(label, exponent bound) for every ideal of S.

    A prime of S that cannot be split gets one placeholder entry ``p.*``
    standing for the product of the ideals above it.
    """
    tower = support.tower
    out = {}
    for q in support.T:
        out[q.label] = conductor_exponent_bound(tower, q)
    for p in sorted(support.full_primes):
        try:
            for q in tower.primes_above(p):
                out[q.label] = conductor_exponent_bound(tower, q)
        except UnsafePrimeError:
            out[f"{p}.*"] = conductor_exponent_bound(tower, p)
    return sorted(out.items())


def enumerate_levels(ideals: list[tuple[str, int]], max_count: int = 100_000) -> list[dict]:
    """Every ideal supported on the given primes with exponents up to their bounds."""
    count = math.prod(b + 1 for _, b in ideals)
    if count > max_count:
        raise ConfigurationError(f"{count} candidate levels exceed the limit {max_count}")
    labels = [lab for lab, _ in ideals]
    levels = []
    for exps in itertools.product(*(range(b + 1) for _, b in ideals)):
        levels.append({lab: e for lab, e in zip(labels, exps) if e})
    return levels


@dataclass(frozen=True)
class CongruenceBound:
    primes: frozenset
    norm_minus: Fraction
    norm_plus: Fraction
    residual: int

    def summary(self) -> dict:
        return {"primes": [str(p) for p in sorted(self.primes)], "norm_minus": str(self.norm_minus),
                "norm_plus": str(self.norm_plus), "residual": str(self.residual)}


def hecke_norm(form: EigenformData, coords) -> Fraction:
    """Norm from the Hecke field of the element with the given power-basis coordinates."""
    h = sympy.Poly(list(reversed(form.hecke_poly)), _X, domain="QQ")
    if not any(coords):
        return Fraction(0)
    g = sympy.Poly(list(reversed([sympy.Rational(c.numerator, c.denominator) for c in coords])), _X, domain="QQ")
    res = sympy.resultant(h, g)
    lead = form.hecke_poly[-1]
    value = sympy.Rational(res) / sympy.Rational(lead) ** g.degree()
    return Fraction(int(value.p), int(value.q))


def congruence_bound(N_p: int, form: EigenformData, p_label: str, trial_bound: int = DEFAULT_TRIAL_BOUND) -> CongruenceBound:
    """Primes ell dividing Norm((N_p + 1) ∓ a_p) for either sign."""
    if p_label not in form.ap:
        raise IncompleteReportError(f"form {form.label} has no eigenvalue at {p_label}", gaps=[form.label])
    norm, coords = form.ap[p_label]
    if norm != N_p:
        raise DataError(f"form {form.label} records norm {norm} at {p_label}, expected {N_p}")
    shifted = [Fraction(0)] * form.degree
    shifted[0] = Fraction(N_p + 1)
    minus = hecke_norm(form, [s - c for s, c in zip(shifted, coords)])
    plus = hecke_norm(form, [s + c for s, c in zip(shifted, coords)])
    if minus == 0 or plus == 0:
        raise DataError(f"form {form.label}: a_{p_label} = ±(N+1) breaks the Ramanujan bound")
    primes: set[int] = set()
    residual = 1
    for value in (minus, plus):
        factors, cofactor = prime_factors(abs(value.numerator), trial_bound)
        primes |= set(factors)
        residual = max(residual, cofactor)
    for p in primes:
        assert minus.numerator % p == 0 or plus.numerator % p == 0
    return CongruenceBound(frozenset(primes), minus, plus, residual)


@dataclass
class BoundReport:
    kappa: int
    kappa1: int
    kappa2: int
    kappa_prime: int
    disc_multiple: int
    C_L: int
    norm_frak_p: int
    form_bounds: dict
    gaps: list
    final_bound: int
    levels_enumerated: int

    def summary(self) -> dict:
        return {
            "kappa": str(self.kappa),
            "kappa1": str(self.kappa1),
            "kappa2": str(self.kappa2),
            "kappa_prime": str(self.kappa_prime),
            "disc_multiple": str(self.disc_multiple),
            "C_L": str(self.C_L),
            "norm_frak_p": str(self.norm_frak_p),
            "forms": {k: v.summary() for k, v in sorted(self.form_bounds.items())},
            "levels_enumerated": self.levels_enumerated,
            "gaps": [_level_text(g) for g in self.gaps],
            "final_bound": str(self.final_bound),
        }


def _level_text(level: dict) -> str:
    return "*".join(f"{k}^{e}" for k, e in sorted(level.items())) or "(1)"


def assemble_bound(config: BoundConfig, support, kappa_cert: KappaCertificate, forms: list[EigenformData],
                   trial_bound: int = DEFAULT_TRIAL_BOUND) -> BoundReport:
    """κ′ together with every congruence prime; levels without a supplied form are listed as gaps."""
    tower = support.tower
    frak_p = support.frak_p
    kappa2 = support.max_norm()
    disc = abs(tower.disc_multiple)
    kappa_prime = max(4, disc, config.C_L, frak_p.norm, kappa_cert.kappa, config.effective_kappa1, kappa2)
    levels = enumerate_levels(support_ideals(support), config.max_levels)
    covered = {f.level_key() for f in forms}
    gaps = [lv for lv in levels if tuple(sorted(lv.items())) not in covered]
    bounds = {}
    final = kappa_prime
    for form in forms:
        bad = form.ramanujan_violations()
        if bad:
            raise DataError(f"form {form.label} violates the Ramanujan bound at {', '.join(bad)}")
        cb = congruence_bound(frak_p.norm, form, frak_p.label, trial_bound)
        bounds[form.label] = cb
        final = max([final, cb.residual, *cb.primes])
    return BoundReport(kappa_cert.kappa, config.effective_kappa1, kappa2, kappa_prime, disc, config.C_L,
                       frak_p.norm, bounds, gaps, final, len(levels))
