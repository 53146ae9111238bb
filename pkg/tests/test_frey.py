import math
import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from edspower.errors import PreconditionError, VerificationError
from edspower.frey import (
    DescentTriple,
    SupportSets,
    build_frey,
    build_support,
    descent_triple,
    gcd_support_check,
    normalize_signs,
    scale_integral,
    support_for_prime,
    synthetic_power_instance,
    verify_prop_conclusions,
    weierstrass_invariants,
)
from edspower.tower import FieldTower

from .conftest import curve, sequence, tower_for
from .oracles import frey_oracle


def rational_tower(thetas):
    t = FieldTower()
    t.labels.update({f"theta{i + 1}": t.scalar(th) for i, th in enumerate(thetas)})
    return t


def test_descent_triple_for_n1_on_congruent_curve():
    trip = descent_triple(tower_for("cong25"), sequence("cong25"), 1)
    assert sorted(abs(e.rational()) for e in trip.eps) == [62, 82, 98]
    by_theta = {t.rational(): abs(e.rational()) for t, e in zip(
        [tower_for("cong25").labels[f"theta{i}"] for i in (1, 2, 3)], trip.eps)}
    assert by_theta == {0: 82, 20: 62, -20: 98}


@pytest.mark.parametrize("name, top", [("cong25", 8), ("synthetic", 8), ("a1odd", 8), ("cubic24", 3)])
def test_descent_identity_holds_exactly(name, top):
    t, seq = tower_for(name), sequence(name)
    thetas = [t.labels[f"theta{i}"] for i in (1, 2, 3)]
    for n in range(1, top + 1):
        trip = descent_triple(t, seq, n)
        term = seq.term(n)
        for e, th in zip(trip.eps, thetas):
            assert e * e + th * term.B**2 == t.scalar(4 * term.A)


def test_even_index_roots_lie_in_the_splitting_field():
    t, seq = tower_for("cubic24"), sequence("cubic24")
    splitting_degree = 6  # base cubic and the discriminant square root
    for n in (2, 4):
        for e in descent_triple(t, seq, n).eps:
            assert not any(e.coords[splitting_degree:])


@pytest.mark.parametrize("name, top", [("cong25", 5), ("a1odd", 5), ("cubic24", 3)])
def test_gcd_support_passes(name, top):
    c, t, seq = curve(name), tower_for(name), sequence(name)
    for n in range(1, top + 1):
        report = gcd_support_check(t, c.model, descent_triple(t, seq, n))
        assert report.passed, report.pairs


def test_gcd_support_example_values():
    c, t, seq = curve("cong25"), tower_for("cong25"), sequence("cong25")
    report = gcd_support_check(t, c.model, descent_triple(t, seq, 1))
    for entry in report.pairs:
        assert entry["residual"] == 1
        assert set(_primes(entry["gcd"])) <= {2, 5}


def _primes(n):
    out, p = [], 2
    while n > 1:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1
    return out


def test_triple_rejects_perturbed_eps():
    t = tower_for("cong25")
    trip = descent_triple(t, sequence("cong25"), 1)
    with pytest.raises(VerificationError):
        DescentTriple((trip.eps[0] + 1, trip.eps[1], trip.eps[2]), 1, trip.A, trip.B)


def test_triple_rejects_equal_up_to_sign():
    t = rational_tower([0, 0, 5])
    e = t.scalar
    with pytest.raises(VerificationError):
        DescentTriple((e(2), e(-2), e(1)), 1, 1, 1)


def test_build_support_on_congruent_curve():
    c, t, seq = curve("cong25"), tower_for("cong25"), sequence("cong25")
    support = build_support(t, c.model, seq, silverman_start=2)
    assert support.T == []
    assert support.T_rational == [2, 5]
    assert support.max_norm() == 5
    assert support.frak_p.label == "11.0"
    assert all(support.kappa.p % q for q in support.T_rational)
    assert not support.contains(support.frak_p)


def test_support_for_prime_rejects_bad_primes():
    c, t = curve("cong25"), tower_for("cong25")
    with pytest.raises(PreconditionError):
        support_for_prime(t, c.model, 5)


def test_normalize_signs_identity_case():
    # eps = (10, 3, 4): 7 | 10 - 3 and 7 | 3 + 4 already; B = 1, A = 0, theta_i = -eps_i^2
    t = rational_tower([-100, -9, -16])
    trip = DescentTriple(tuple(t.scalar(v) for v in (10, 3, 4)), 1, 0, 1)
    out = normalize_signs(trip, t.prime_above(7))
    assert out.eps == trip.eps and out.sign_normalized


def test_normalize_signs_flips():
    t = rational_tower([-100, -9, -16])
    trip = DescentTriple(tuple(t.scalar(v) for v in (10, -3, -4)), 1, 0, 1)
    out = normalize_signs(trip, t.prime_above(7))
    assert [e.rational() for e in out.eps] == [10, 3, 4]


def test_exactly_one_sign_per_pair_when_p_divides_u():
    inst = synthetic_power_instance()
    t = tower_for("synthetic")
    trip = descent_triple(t, sequence("synthetic"), 1)
    p = t.prime_above(inst.p)
    for i in range(3):
        for j in range(i + 1, 3):
            minus = p.divides(trip.eps[i] - trip.eps[j])
            plus = p.divides(trip.eps[i] + trip.eps[j])
            assert minus != plus


def test_normalize_signs_without_p_dividing_b_fails():
    t, seq = tower_for("cong25"), sequence("cong25")
    with pytest.raises(PreconditionError):
        normalize_signs(descent_triple(t, seq, 1), t.prime_above(11))


def test_scale_integral_example():
    t = rational_tower([0, 20, -20])
    trip = DescentTriple(tuple(t.scalar(v) for v in (82, 62, 98)), 1, 1681, 12, sign_normalized=True)
    assert [w.rational() for w in trip.w] == [20, -36, 16]
    z1, z2, z3, alpha = scale_integral(t, trip)
    assert alpha == Fraction(1, 4)
    assert [z.rational() for z in (z1, z2, z3)] == [5, -9, 4]
    frey = build_frey(z1.rational(), z2.rational(), z3.rational())
    assert frey.delta_F == 518400


def test_scale_requires_normalized_signs():
    t = rational_tower([0, 20, -20])
    trip = DescentTriple(tuple(t.scalar(v) for v in (82, 62, 98)), 1, 1681, 12)
    with pytest.raises(PreconditionError):
        scale_integral(t, trip)


def test_frey_small_example():
    assert build_frey(1, 1, -2).delta_F == 64
    with pytest.raises(PreconditionError):
        build_frey(1, 1, 1)


nonzero = st.integers(-10**6, 10**6).filter(bool)


@given(nonzero, nonzero)
def test_frey_invariants_against_discriminant_oracle(z1, z2):
    z3 = -z1 - z2
    if z3 == 0:
        return
    frey = build_frey(z1, z2, z3)
    c4, delta = frey_oracle(z1, z2)
    assert (frey.c4_F, frey.delta_F) == (c4, delta)
    assert weierstrass_invariants(0, -(z1 - z2), 0, -z1 * z2, 0) == (c4, delta)
    assert 16 * (z1 * z1 - z2 * z3) == 16 * (z2 * z2 - z3 * z1) == 16 * (z3 * z3 - z1 * z2)


@given(st.lists(nonzero, min_size=2, max_size=2), st.integers(1, 50))
def test_scaling_over_q_removes_common_factor(pair, g):
    a, b = pair
    if a == b or a == -b or a == 0 or b == 0:
        return
    # eps = (g*a, g*b, ...) is awkward to make satisfy the descent identity, so build
    # thetas from eps directly: B = 1, A = 0, theta_i = -eps_i^2.
    e3 = g * (a + b) + 1
    eps = (g * a, g * b, e3)
    if len({abs(e) for e in eps}) < 3:
        return
    t = rational_tower([-e * e for e in eps])
    trip = DescentTriple(tuple(t.scalar(e) for e in eps), 1, 0, 1, sign_normalized=True)
    z1, z2, z3, alpha = scale_integral(t, trip)
    zs = [int(z.rational()) for z in (z1, z2, z3)]
    assert sum(zs) == 0
    assert math.gcd(*zs) == 1
    assert [alpha * w.rational() for w in trip.w] == zs


def test_classification_examples():
    t = FieldTower()
    p = t.prime_above(3)
    frey = build_frey(3**5, 32, -275)
    support = SupportSets(t, [], {2, 5, 11}, p)
    report = verify_prop_conclusions(frey, support, 5, norm_bound=2000)
    assert report.passed and report.norm_certificate
    assert report.reduction["3.0"] == "multiplicative"
    # 13 divides none of the z_i: good reduction, so it is not listed
    assert "13.0" not in report.reduction


def test_verify_reports_a_failure_outside_s():
    t = FieldTower()
    frey = build_frey(3**5, 32, -275)
    support = SupportSets(t, [], {2}, t.prime_above(3))  # 5 and 11 left out of S
    report = verify_prop_conclusions(frey, support, 5, norm_bound=100)
    assert not report.passed
    assert any("5.0" in f for f in report.failures)


def test_synthetic_instance_end_to_end():
    inst = synthetic_power_instance()
    t, seq = tower_for("synthetic"), sequence("synthetic")
    assert (inst.model, inst.point) == (curve("synthetic").model, curve("synthetic").point)
    assert seq.B(1) == 3**5
    support = support_for_prime(t, inst.model, inst.p)
    trip = normalize_signs(descent_triple(t, seq, 1), support.frak_p)
    z1, z2, z3, alpha = scale_integral(t, trip, support)
    frey = build_frey(z1, z2, z3, alpha)
    report = verify_prop_conclusions(frey, support, inst.ell, norm_bound=10**4)
    assert report.passed, report.failures
    assert report.norm_certificate
    assert report.primes_checked > 1000


# k1 - k2, k1 + k3 and k2 + k3 must avoid multiples of u, or u divides the discriminant.
@pytest.mark.parametrize("u, ell, a0, k", [(5, 3, 1, (2, 4, 2)), (7, 3, 2, (2, 4, 2))])
def test_other_synthetic_instances(u, ell, a0, k):
    from edspower.curve import to_short_model
    from edspower.eds import EDSequence
    from edspower.tower import build_tower

    inst = synthetic_power_instance(u, ell, a0, k)
    seq = EDSequence(inst.model, inst.point)
    assert seq.B(1) == u**ell
    short, image = to_short_model(inst.model, inst.point)
    t = build_tower(short, image.x, image.y)
    support = support_for_prime(t, inst.model, inst.p, trial_bound=10**6)
    trip = normalize_signs(descent_triple(t, seq, 1), support.frak_p)
    frey = build_frey(*scale_integral(t, trip, support))
    assert verify_prop_conclusions(frey, support, ell, norm_bound=3000).passed


def test_synthetic_rejects_odd_k():
    with pytest.raises(PreconditionError):
        synthetic_power_instance(k=(1, 2, 4))
