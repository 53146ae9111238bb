"""Descent triples, sign normalization and the Frey curve attached to a power term."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .arith import DEFAULT_TRIAL_BOUND, integer_root, prime_factors, primes_up_to, strip_coprime_part
from .curve import RationalPoint, WeierstrassModel
from .eds import EDSequence, KappaCertificate, kappa_certificate
from .errors import BudgetExceededError, PreconditionError, UnsafePrimeError, VerificationError
from .tower import AlgebraicNumber, FieldTower, PrimeIdealData, minkowski_T

logger = logging.getLogger(__name__)


def _factor_completely(n: int, trial_bound: int) -> list[int]:
    factors, cofactor = prime_factors(n, trial_bound)
    if cofactor != 1:
        raise BudgetExceededError(
            f"could not factor {n} within trial bound {trial_bound} ({cofactor.bit_length()}-bit cofactor)"
        )
    return sorted(factors)


@dataclass
class SupportSets:
    """The bad set S: every ideal above a prime of ``full_primes``, plus the ideals in ``T``.

    ``full_primes`` holds the rational primes dividing 2Δ_E and the primes
    dividing the tower's equation-order discriminant that lie in the
    enumerated range; primes dividing that discriminant are always treated as
    bad, even when they were never factored out explicitly.
    """

    tower: FieldTower
    T: list[PrimeIdealData]
    full_primes: set[int]
    frak_p: PrimeIdealData
    kappa: KappaCertificate | None = None
    minkowski: object = None

    @property
    def T_rational(self) -> list[int]:
        return sorted(self.full_primes | {q.p for q in self.T})

    def contains(self, ideal: PrimeIdealData) -> bool:
        if ideal.p in self.full_primes or self.tower.disc_multiple % ideal.p == 0:
            return True
        return ideal in self.T

    def max_norm(self) -> int:
        """Largest ideal norm in S; unsplittable primes are bounded by p^d."""
        norms = [q.norm for q in self.T]
        for p in self.full_primes:
            try:
                norms.extend(q.norm for q in self.tower.split_prime(p))
            except UnsafePrimeError:
                norms.append(p**self.tower.degree)
        return max(norms, default=1)

    def summary(self) -> dict:
        return {
            "T": [q.label for q in self.T],
            "S_rational": [str(p) for p in self.T_rational],
            "frak_p": {"label": self.frak_p.label, "norm": str(self.frak_p.norm)},
        }


def _bad_rational_primes(tower: FieldTower, model: WeierstrassModel, trial_bound: int) -> set[int]:
    primes = set(_factor_completely(2 * model.delta, trial_bound))
    if tower.degree > 1:
        rest = strip_coprime_part(tower.disc_multiple, 2 * model.delta)
        if rest > 1:
            primes |= set(_factor_completely(rest, trial_bound))
    return primes


def build_support(
    tower: FieldTower,
    model: WeierstrassModel,
    seq: EDSequence,
    silverman_start: int,
    trial_bound: int = DEFAULT_TRIAL_BOUND,
) -> SupportSets:
    """Assemble S, run the κ certificate against the primes below S, and fix 𝔭."""
    mink = minkowski_T(tower)
    full = _bad_rational_primes(tower, model, trial_bound) | set(mink.unsafe_primes)
    T = [q for q in mink.T if q.p not in full]
    below = full | {q.p for q in T}
    cert = kappa_certificate(seq, below, silverman_start, trial_bound)
    frak_p = tower.prime_above(cert.p)
    support = SupportSets(tower, T, full, frak_p, cert, mink)
    assert not support.contains(frak_p)
    return support


def support_for_prime(
    tower: FieldTower, model: WeierstrassModel, p: int, trial_bound: int = DEFAULT_TRIAL_BOUND
) -> SupportSets:
    """S as in build_support but with 𝔭 chosen above a caller-supplied prime p."""
    mink = minkowski_T(tower)
    full = _bad_rational_primes(tower, model, trial_bound) | set(mink.unsafe_primes)
    T = [q for q in mink.T if q.p not in full]
    if p in full or p in {q.p for q in T}:
        raise PreconditionError(f"{p} lies below S")
    return SupportSets(tower, T, full, tower.prime_above(p), None, mink)


# -- descent -------------------------------------------------------------------


def _canonical_sign(x: AlgebraicNumber) -> AlgebraicNumber:
    lead = next(c for c in x.coords if c)
    return x if lead > 0 else -x


@dataclass(frozen=True)
class DescentTriple:
    eps: tuple[AlgebraicNumber, AlgebraicNumber, AlgebraicNumber]
    n: int
    A: int
    B: int
    sign_normalized: bool = False

    def __post_init__(self):
        thetas = _thetas(self.eps[0].tower)
        for e, t in zip(self.eps, thetas):
            if e * e != 4 * self.A - t * self.B**2:
                raise VerificationError(f"descent identity fails for index {self.n}")
        for i in range(3):
            for j in range(i + 1, 3):
                if self.eps[i] == self.eps[j] or self.eps[i] == -self.eps[j]:
                    raise VerificationError(f"eps{i + 1} = ±eps{j + 1}")

    @property
    def w(self) -> tuple[AlgebraicNumber, AlgebraicNumber, AlgebraicNumber]:
        e1, e2, e3 = self.eps
        return e1 - e2, e2 - e3, e3 - e1


def _thetas(tower: FieldTower) -> list[AlgebraicNumber]:
    try:
        return [tower.labels[f"theta{i}"] for i in (1, 2, 3)]
    except KeyError:
        raise PreconditionError("tower carries no cubic roots; build it with build_tower") from None


def descent_triple(tower: FieldTower, seq: EDSequence, n: int) -> DescentTriple:
    """The square roots ε_i of 4A_n − θ_i B_n², each with positive leading coordinate."""
    term = seq.term(n)
    eps = []
    for i, theta in enumerate(_thetas(tower), start=1):
        v = 4 * term.A - theta * term.B**2
        root = tower.sqrt(v)
        if root is None:
            raise VerificationError(f"4A_{n} - theta{i} B_{n}^2 is not a square in the tower")
        eps.append(_canonical_sign(root))
    return DescentTriple(tuple(eps), n, term.A, term.B)


@dataclass
class GcdSupportReport:
    passed: bool
    pairs: list[dict] = field(default_factory=list)


def gcd_support_check(
    tower: FieldTower, model: WeierstrassModel, trip: DescentTriple, trial_bound: int = DEFAULT_TRIAL_BOUND
) -> GcdSupportReport:
    """Certify that εi − εj and εi + εj share no prime ideal outside 2Δ_E.

    A common prime ideal divides both norms, so it suffices that the gcd of
    the two norms is supported on 2Δ_E. Any leftover rational prime is
    examined ideal by ideal.
    """
    bad = 2 * model.delta
    thetas = _thetas(tower)
    report = GcdSupportReport(True)
    for i in range(3):
        for j in range(i + 1, 3):
            minus = trip.eps[i] - trip.eps[j]
            plus = trip.eps[i] + trip.eps[j]
            # A common divisor of ε_i ∓ ε_j also divides 2ε_i, hence 4ε_i² and
            # (2ε_i)² − (2ε_j)² = 4(θ_j − θ_i)B², so those norms may join the gcd.
            square = 4 * trip.eps[i] * trip.eps[i]
            spread = 4 * (thetas[j] - thetas[i]) * trip.B**2
            norms = [x.norm() for x in (minus, plus, square, spread)]
            assert all(v.denominator == 1 for v in norms), "ε and θ are algebraic integers"
            g = math.gcd(*(int(v) for v in norms))
            residual = strip_coprime_part(g, bad)
            entry = {"pair": [i + 1, j + 1], "norm_minus": int(norms[0]), "norm_plus": int(norms[1]),
                     "gcd": g, "residual": residual, "offending_ideals": []}
            if residual > 1:
                for q in _factor_completely(residual, trial_bound):
                    try:
                        ideals = tower.primes_above(q)
                    except UnsafePrimeError:
                        entry["offending_ideals"].append(f"{q}.?")
                        continue
                    for ideal in ideals:
                        if ideal.divides(minus) and ideal.divides(plus):
                            entry["offending_ideals"].append(ideal.label)
            entry["passed"] = not entry["offending_ideals"]
            report.passed &= entry["passed"]
            report.pairs.append(entry)
    return report


def normalize_signs(trip: DescentTriple, frak_p: PrimeIdealData) -> DescentTriple:
    """Flip ε2 and ε3 so that 𝔭 divides ε1 − ε2 and ε2 + ε3."""
    e1, e2, e3 = trip.eps
    if not frak_p.divides(e1 - e2):
        e2 = -e2
    if not frak_p.divides(e2 + e3):
        e3 = -e3
    pattern = {
        "p | eps1 - eps2": frak_p.divides(e1 - e2),
        "p | eps2 + eps3": frak_p.divides(e2 + e3),
        "p ∤ eps2 - eps3": not frak_p.divides(e2 - e3),
        "p ∤ eps3 - eps1": not frak_p.divides(e3 - e1),
    }
    failed = [k for k, ok in pattern.items() if not ok]
    if failed:
        raise PreconditionError(
            f"sign pattern unattainable at {frak_p.label} ({', '.join(failed)}); the prime does not divide B_n"
        )
    return DescentTriple((e1, e2, e3), trip.n, trip.A, trip.B, True)


# -- scaling and the Frey curve ---------------------------------------------------


def _rational_content_divide(w: list[AlgebraicNumber], tower: FieldTower) -> tuple[list[AlgebraicNumber], Fraction]:
    """Divide w by the largest rational integer g keeping every entry integral."""
    if tower.degree == 1:
        g = math.gcd(*(int(x.rational()) for x in w))
        return [x / g for x in w], Fraction(1, g)
    norms = [int(x.norm()) for x in w]
    g = math.gcd(*norms)
    alpha = Fraction(1)
    for q in _factor_completely(g, DEFAULT_TRIAL_BOUND) if g > 1 else []:
        while True:
            trial = [x / q for x in w]
            if not all(tower.is_algebraic_integer(x) for x in trial):
                break
            w, alpha = trial, alpha / q
    return w, alpha


def scale_integral(
    tower: FieldTower, trip: DescentTriple, support: SupportSets | None = None
) -> tuple[AlgebraicNumber, AlgebraicNumber, AlgebraicNumber, Fraction]:
    """z_i = α w_i integral with gcd ideal supported on T.

    Only rational α are searched. Over Q this is always enough; elsewhere a
    common prime ideal outside T that survives the rational scaling is
    reported as a budget failure.
    """
    if not trip.sign_normalized:
        raise PreconditionError("normalize signs before scaling")
    z, alpha = _rational_content_divide(list(trip.w), tower)
    assert z[0] + z[1] + z[2] == 0
    if tower.degree > 1:
        g = math.gcd(*(int(x.norm()) for x in z))
        if g > 1:
            for q in _factor_completely(g, DEFAULT_TRIAL_BOUND):
                ideals = tower.split_prime(q)
                for ideal in ideals:
                    if all(ideal.divides(x) for x in z) and not (support and ideal in support.T):
                        raise BudgetExceededError(
                            f"the gcd ideal of the z_i contains {ideal.label} outside T; no rational scaling removes it"
                        )
    return z[0], z[1], z[2], alpha


def weierstrass_invariants(a1, a2, a3, a4, a6) -> tuple:
    """(c4, Δ) from the general formulas; works over any ring."""
    b2 = a1 * a1 + 4 * a2
    b4 = 2 * a4 + a1 * a3
    b6 = a3 * a3 + 4 * a6
    b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4
    c4 = b2 * b2 - 24 * b4
    delta = -b2 * b2 * b8 - 8 * b4 * b4 * b4 - 27 * b6 * b6 + 9 * b2 * b4 * b6
    return c4, delta


@dataclass(frozen=True)
class FreyCurve:
    z1: object
    z2: object
    z3: object
    alpha: Fraction
    delta_F: object
    c4_F: object

    def summary(self) -> dict:
        def enc(x):
            coords = x.coords if isinstance(x, AlgebraicNumber) else (Fraction(x),)
            return [str(c) for c in coords]

        return {"z": [enc(self.z1), enc(self.z2), enc(self.z3)], "alpha": str(self.alpha),
                "delta_F": enc(self.delta_F), "c4_F": enc(self.c4_F)}


def build_frey(z1, z2, z3, alpha: Fraction = Fraction(1)) -> FreyCurve:
    """Y² = X(X − z1)(X + z2); closed forms are checked against the general invariants."""
    if z1 + z2 + z3 != 0:
        raise PreconditionError("z1 + z2 + z3 must vanish")
    if any(z == 0 for z in (z1, z2, z3)):
        raise PreconditionError("degenerate Frey curve: some z_i is zero")
    delta = 16 * (z1 * z2 * z3) ** 2
    c4 = 16 * (z1 * z1 - z2 * z3)
    forms = (c4, 16 * (z2 * z2 - z3 * z1), 16 * (z3 * z3 - z1 * z2))
    c4_gen, delta_gen = weierstrass_invariants(0, -(z1 - z2), 0, -(z1 * z2), 0)
    if not (delta == delta_gen and all(f == c4_gen for f in forms)):
        raise VerificationError("Frey invariants disagree with the general formulas")
    return FreyCurve(z1, z2, z3, alpha, delta, c4)


@dataclass
class PropReport:
    ell: int
    clauses: dict[str, bool]
    reduction: dict[str, str]
    failures: list[str]
    norm_certificate: bool
    primes_checked: int

    @property
    def passed(self) -> bool:
        return not self.failures and all(self.clauses.values())

    def summary(self) -> dict:
        return {
            "ell": self.ell,
            "passed": self.passed,
            "clauses": self.clauses,
            "failures": self.failures,
            "norm_certificate": self.norm_certificate,
            "primes_checked": self.primes_checked,
            "reduction": self.reduction,
        }


def _classify(v_delta: int, v_c4: int) -> str:
    if v_delta == 0:
        return "good"
    if v_c4 == 0:
        return "multiplicative"
    return "additive/unknown"


def _norm_certificate(frey: FreyCurve, support: SupportSets, ell: int) -> bool:
    """Each |Norm(z_i)| with the primes below S removed is an exact ell-th power."""
    below = math.prod(support.T_rational) or 1
    for z in (frey.z1, frey.z2, frey.z3):
        nz = z.norm() if isinstance(z, AlgebraicNumber) else Fraction(z)
        rest = strip_coprime_part(int(nz), below)
        if not integer_root(rest, ell)[1]:
            return False
    return True


def verify_prop_conclusions(frey: FreyCurve, support: SupportSets, ell: int, norm_bound: int = 10**4) -> PropReport:
    """Check semistability and ell | v(Δ_F) at every prime ideal outside S of norm ≤ norm_bound,
    and multiplicative reduction at 𝔭."""
    tower = support.tower
    zs = [tower.coerce(z) for z in (frey.z1, frey.z2, frey.z3)]
    c4 = tower.coerce(frey.c4_F)
    reduction: dict[str, str] = {}
    failures: list[str] = []
    checked = 0
    for p in primes_up_to(norm_bound):
        if p in support.full_primes or tower.disc_multiple % p == 0:
            continue
        for ideal in tower.split_prime(p):
            if ideal.norm > norm_bound or support.contains(ideal):
                continue
            checked += 1
            vz = [ideal.valuation(z) for z in zs]
            v_delta = 2 * sum(vz)
            v_c4 = ideal.valuation(c4)
            kind = _classify(v_delta, v_c4)
            if kind != "good":
                reduction[ideal.label] = kind
            if kind == "additive/unknown":
                failures.append(f"(a) not semistable at {ideal.label}")
            if v_delta % ell:
                failures.append(f"(a) ell does not divide v(Delta_F) at {ideal.label}")
    fp = support.frak_p
    vz = [fp.valuation(z) for z in zs]
    v_delta = 2 * sum(vz)
    kind = _classify(v_delta, fp.valuation(c4))
    reduction[fp.label] = kind
    clauses = {
        "(a) semistable with ell | v(Delta_F) outside S": not failures,
        "(b) p | z1, p ∤ z2, p ∤ z3": vz[0] > 0 and vz[1] == 0 and vz[2] == 0,
        "(b) multiplicative at p": kind == "multiplicative",
        "(b) ell | v_p(Delta_F)": v_delta % ell == 0,
    }
    cert = _norm_certificate(frey, support, ell)
    return PropReport(ell, clauses, dict(sorted(reduction.items())), failures, cert, checked)


# -- synthetic power instances ------------------------------------------------------


@dataclass(frozen=True)
class SyntheticInstance:
    model: WeierstrassModel
    point: RationalPoint
    u: int
    ell: int
    p: int


def synthetic_power_instance(u: int = 3, ell: int = 5, a0: int = 1, k: tuple[int, int, int] = (2, 4, 6)) -> SyntheticInstance:
    """A genuine curve and point whose B_1 equals u^ell.

    With U = u^(2ell) and ε = (2a0 + k1 U, 2a0 + k2 U, −2a0 + k3 U), the roots
    θ_i = (4a0² − ε_i²)/U are integers, the short cubic ∏(x − θ_i) comes from
    an integral model when the k_i are even, and x(P) = a0²/u^(2ell).
    """
    if any(ki % 2 for ki in k):
        raise PreconditionError("the k_i must be even")
    if math.gcd(a0, u) != 1:
        raise PreconditionError("a0 must be coprime to u")
    U = u ** (2 * ell)
    eps = (2 * a0 + k[0] * U, 2 * a0 + k[1] * U, -2 * a0 + k[2] * U)
    thetas = [(4 * a0 * a0 - e * e) // U for e in eps]
    assert all(4 * a0 * a0 - e * e == t * U for e, t in zip(eps, thetas))
    s1 = sum(thetas)
    s2 = thetas[0] * thetas[1] + thetas[1] * thetas[2] + thetas[2] * thetas[0]
    s3 = thetas[0] * thetas[1] * thetas[2]
    # short model x'^3 - s1 x'^2 + s2 x' - s3 with x' = 4x, y' = 8y
    if s1 % 4 or s2 % 16 or s3 % 64:
        raise PreconditionError("parameters do not descend to an integral model")
    model = WeierstrassModel(0, -s1 // 4, 0, s2 // 16, -s3 // 64)
    B = u**ell
    prod = eps[0] * eps[1] * eps[2]
    if prod % 8:
        raise PreconditionError("ε product must be divisible by 8")
    point = RationalPoint(Fraction(a0 * a0, B * B), Fraction(prod // 8, B**3))
    if not model.contains(point):
        raise VerificationError("synthetic point is not on its curve")
    p = min(prime_factors(u)[0])
    return SyntheticInstance(model, point, u, ell, p)
