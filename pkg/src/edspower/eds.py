"""Elliptic divisibility sequences: term cache, divisibility checks, powers, certificates."""

from __future__ import annotations

import hashlib
import json
import logging
import math
import threading
from dataclasses import dataclass

from .arith import (
    DEFAULT_TRIAL_BOUND,
    perfect_power_decomposition,
    prime_factors,
    primes_up_to,
    some_prime_factor_outside,
    strip_coprime_part,
    valuation,
)
from .curve import (
    PointDecomposition,
    RationalPoint,
    WeierstrassModel,
    _add_unchecked,
    _check_on,
    decompose_point,
    scalar_multiply,
)
from .errors import BudgetExceededError, PreconditionError, VerificationError

logger = logging.getLogger(__name__)


def curve_hash(model: WeierstrassModel, generator: RationalPoint) -> str:
    payload = json.dumps(
        {"a": [str(a) for a in model.ainvs], "x": str(generator.x), "y": str(generator.y)},
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode()).hexdigest()


class EDSequence:
    """The sequence (B_n) attached to a point on an integral model.

    Terms are computed on demand and cached; consecutive indices are produced by
    a single addition of the generator.
    """

    def __init__(self, model: WeierstrassModel, generator: RationalPoint):
        _check_on(model, generator)
        if generator.is_infinity:
            raise PreconditionError("generator must be an affine point")
        self.model = model
        self.generator = generator
        self.hash = curve_hash(model, generator)
        self._terms: dict[int, PointDecomposition] = {}
        self._lock = threading.Lock()

    def __repr__(self):
        return f"EDSequence({self.model.ainvs}, ({self.generator.x}, {self.generator.y}))"

    @property
    def terms(self) -> dict[int, PointDecomposition]:
        """Snapshot of the cache."""
        with self._lock:
            return dict(self._terms)

    def seed(self, terms) -> None:
        """Insert precomputed decompositions (e.g. from a cache file) after checking them."""
        for t in terms:
            if not self.model.contains(t.point()) or math.gcd(t.B, t.A * t.C) != 1:
                raise VerificationError(f"cached term {t.n} is not a valid decomposition")
        with self._lock:
            for t in terms:
                self._terms[t.n] = t

    def term(self, n: int) -> PointDecomposition:
        if n < 1:
            raise ValueError("index must be positive")
        with self._lock:
            cached = self._terms.get(n)
            if cached is not None:
                return cached
            prev = self._terms.get(n - 1)
        if prev is not None:
            point = _add_unchecked(self.model, prev.point(), self.generator)
        else:
            point = scalar_multiply(self.model, self.generator, n)
        dec = decompose_point(point, n)
        with self._lock:
            self._terms[n] = dec
        return dec

    def B(self, n: int) -> int:
        return self.term(n).B

    def extend(self, max_index: int) -> None:
        for n in range(1, max_index + 1):
            self.term(n)


def valuation_of_term(seq: EDSequence, p: int, n: int) -> int:
    return valuation(seq.B(n), p)


@dataclass(frozen=True)
class ValuationLawReport:
    p: int
    n: int
    m: int
    v_n: int
    v_nm: int
    v_m: int
    defect: int
    exact_law_applies: bool

    @property
    def passed(self) -> bool | None:
        """True/False when the exact law applies, None when only the defect is reported."""
        if not self.exact_law_applies:
            return None
        return self.defect == 0


def exact_law_applies(model: WeierstrassModel, p: int) -> bool:
    return p != 2 or model.a1 % 2 == 0


def check_valuation_law(seq: EDSequence, p: int, n: int, m: int) -> ValuationLawReport:
    """Compare v_p(B_nm) with v_p(B_n) + v_p(m) for a prime p dividing B_n."""
    v_n = valuation_of_term(seq, p, n)
    if v_n == 0:
        raise PreconditionError(f"{p} does not divide B_{n}")
    v_nm = valuation_of_term(seq, p, n * m)
    v_m = valuation(m, p)
    return ValuationLawReport(p, n, m, v_n, v_nm, v_m, v_nm - v_n - v_m, exact_law_applies(seq.model, p))


def _supported_part(x: int, support: int) -> int:
    """The largest divisor of x composed only of primes dividing ``support``."""
    return abs(x) // strip_coprime_part(x, support)


def check_valuation_law_all_primes(seq: EDSequence, n: int, m: int) -> bool:
    """Exact law at every prime p | B_n where it applies, without factoring B_n.

    The exact law for all such p says the B_n-supported part of B_nm / B_n
    equals the B_n-supported part of m.
    """
    bn = seq.B(n)
    if bn == 1:
        return True
    ratio, rem = divmod(seq.B(n * m), bn)
    if rem:
        return False
    lhs = _supported_part(ratio, bn)
    rhs = _supported_part(m, bn)
    if not exact_law_applies(seq.model, 2):
        lhs >>= (lhs & -lhs).bit_length() - 1
        rhs >>= (rhs & -rhs).bit_length() - 1
    return lhs == rhs


@dataclass(frozen=True)
class StrongDivisibilityReport:
    max_index: int
    pairs_checked: int
    first_violation: tuple[int, int] | None

    @property
    def passed(self) -> bool:
        return self.first_violation is None


def check_strong_divisibility(seq: EDSequence, max_index: int) -> StrongDivisibilityReport:
    if max_index < 2:
        raise PreconditionError("max_index must be at least 2")
    seq.extend(max_index)
    checked = 0
    for m in range(1, max_index + 1):
        bm = seq.B(m)
        for n in range(m, max_index + 1):
            checked += 1
            if math.gcd(bm, seq.B(n)) != seq.B(math.gcd(m, n)):
                return StrongDivisibilityReport(max_index, checked, (m, n))
    return StrongDivisibilityReport(max_index, checked, None)


def proper_divisors(n: int) -> list[int]:
    return [d for d in range(1, n // 2 + 1) if n % d == 0]


def primitive_divisor_cofactor(seq: EDSequence, n: int) -> int:
    """Largest divisor of B_n coprime to every B_d with d a proper divisor of n.

    By strong divisibility this is exactly the primitive part of B_n, so a
    value above 1 certifies a primitive divisor without factoring anything.
    """
    c = seq.B(n)
    for d in proper_divisors(n):
        c = strip_coprime_part(c, seq.B(d))
        if c == 1:
            break
    return c


@dataclass(frozen=True)
class PowerInstance:
    n: int
    u: int
    ell: int


def find_power_terms(seq: EDSequence, max_index: int, min_exponent: int = 2) -> list[PowerInstance]:
    """All (n, u, ell) with n <= max_index, ell prime >= min_exponent, B_n = u^ell, u > 1."""
    if max_index < 1:
        raise PreconditionError("max_index must be at least 1")
    out = []
    for n in range(1, max_index + 1):
        b = seq.B(n)
        if b == 1:
            continue
        u, k = perfect_power_decomposition(b)
        if k < 2:
            continue
        for ell in sorted(prime_factors(k)[0]):
            if ell >= min_exponent:
                out.append(PowerInstance(n, u ** (k // ell), ell))
    return out


@dataclass(frozen=True)
class KappaCertificate:
    """Data for the statement: if B_n is an ell-th power with ell > kappa then p | B_n."""

    q: int
    r: int
    kappa: int
    p: int
    witness_index: int
    v_q_B1: int
    silverman_start: int
    empirical: bool

    def verify(self, seq: EDSequence, excluded: set[int]) -> None:
        b1 = seq.B(1)
        checks = {
            "q | B_1": b1 % self.q == 0,
            "v_q(B_1) recorded": valuation(b1, self.q) == self.v_q_B1,
            "kappa > v_q(B_1) + r": self.kappa > self.v_q_B1 + self.r,
            "witness index": self.witness_index == self.q ** (self.kappa - self.v_q_B1 - self.r),
            "witness beyond silverman_start": self.witness_index > self.silverman_start,
            "p | B_witness": seq.B(self.witness_index) % self.p == 0,
            "p not in T": self.p not in excluded,
        }
        failed = [k for k, ok in checks.items() if not ok]
        if failed:
            raise VerificationError(f"kappa certificate violates: {', '.join(failed)}")


def empirical_r(seq: EDSequence, q: int, bound: int) -> int:
    """Largest observed v_q(B_nm) - v_q(B_n) - v_q(m) over n*m <= bound with q | B_n."""
    seq.extend(bound)
    worst = 0
    for n in range(1, bound + 1):
        if seq.B(n) % q:
            continue
        for m in range(1, bound // n + 1):
            worst = max(worst, check_valuation_law(seq, q, n, m).defect)
    return worst


def kappa_certificate(
    seq: EDSequence,
    excluded: set[int],
    silverman_start: int,
    trial_bound: int = DEFAULT_TRIAL_BOUND,
    r_bound: int = 60,
    max_witness_index: int = 4096,
) -> KappaCertificate:
    """Build the (q, r, kappa, p) certificate for the excluded prime set T.

    An odd q | B_1 (or q = 2 with a1 even) has r = 0 exactly; only when B_1 is
    a power of 2 and a1 is odd is r estimated over n*m <= r_bound, and the
    certificate is then marked empirical.
    """
    b1 = seq.B(1)
    if b1 == 1:
        raise PreconditionError("B_1 = 1: the generator is integral")
    excluded = set(excluded)
    primes_b1 = sorted(prime_factors(b1, trial_bound)[0])
    if not primes_b1:
        raise BudgetExceededError(f"could not find a prime factor of B_1 = {b1}")
    odd = [q for q in primes_b1 if q != 2]
    q = odd[0] if odd else primes_b1[0]
    empirical = not exact_law_applies(seq.model, q)
    r = empirical_r(seq, q, r_bound) if empirical else 0
    v = valuation(b1, q)

    e = 1
    while q**e <= silverman_start:
        e += 1
    while q**e <= max_witness_index:
        witness = q**e
        bw = seq.B(witness)
        rest = bw
        for t in excluded:
            if rest % t == 0:
                rest //= t ** valuation(rest, t)
        if rest > 1:
            primitive = primitive_divisor_cofactor(seq, witness)
            try:
                p = some_prime_factor_outside(primitive, excluded, trial_bound)
            except (ValueError, BudgetExceededError):
                p = some_prime_factor_outside(bw, excluded, trial_bound)
            cert = KappaCertificate(q, r, e + v + r, p, witness, v, silverman_start, empirical)
            cert.verify(seq, excluded)
            return cert
        logger.info("B_%d has no prime outside T; raising kappa", witness)
        e += 1
    raise BudgetExceededError(f"no witness index q^e <= {max_witness_index} has a prime outside T")
