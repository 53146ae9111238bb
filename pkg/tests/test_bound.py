import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from edspower.bound import (
    BoundConfig,
    EigenformData,
    assemble_bound,
    conductor_exponent_bound,
    conductor_exponent_cap,
    congruence_bound,
    enumerate_levels,
    hecke_norm,
    level_recipe,
    support_ideals,
)
from edspower.errors import ConfigurationError, DataError, IncompleteReportError
from edspower.frey import build_support
from edspower.tower import FieldTower

from .conftest import curve, sequence, tower_for


def form(poly, ap, level=(("2.0", 5),), label="f"):
    return EigenformData.from_json({
        "label": label,
        "hecke_poly": list(poly),
        "level": [{"prime": p, "exp": e} for p, e in level],
        "ap": [{"prime": k, "norm": n, "coords": [str(c) for c in coords]} for k, (n, coords) in ap.items()],
    })


def test_level_recipe_examples():
    r = level_recipe({"q1": 1, "q2": 2}, {"q1": 7}, 7)
    assert (r.M, r.N) == ({"q1": 1}, {"q2": 2})
    r = level_recipe({"q1": 2, "q2": 3}, {"q1": 7, "q2": 7}, 7)
    assert (r.M, r.N) == ({}, {"q1": 2, "q2": 3})
    r = level_recipe({"q1": 1, "q2": 1}, {"q1": 7, "q2": 14}, 7)
    assert (r.M, r.N) == ({"q1": 1, "q2": 1}, {})


@given(st.dictionaries(st.sampled_from(["a", "b", "c", "d"]), st.integers(1, 4)),
       st.dictionaries(st.sampled_from(["a", "b", "c", "d"]), st.integers(0, 30)),
       st.sampled_from([3, 5, 7]))
def test_level_recipe_factors_the_conductor(conductor, vals, ell):
    r = level_recipe(conductor, vals, ell)
    for q, e in conductor.items():
        assert r.M.get(q, 0) + r.N.get(q, 0) == e
        assert r.M.get(q, 0) == (1 if e == 1 and vals.get(q, 0) % ell == 0 else 0)


def test_conductor_exponent_examples():
    q = FieldTower()
    assert conductor_exponent_bound(q, q.prime_above(7)) == 2
    assert conductor_exponent_bound(q, q.prime_above(2)) == 8
    assert conductor_exponent_bound(q, q.prime_above(3)) == 5
    assert conductor_exponent_cap(24) == 146
    assert conductor_exponent_bound(tower_for("cubic24"), 2) == 146


def test_enumerate_levels_examples():
    assert enumerate_levels([]) == [{}]
    assert enumerate_levels([("q", 2)]) == [{}, {"q": 1}, {"q": 2}]
    assert len(enumerate_levels([("2.0", 8), ("5.0", 2)])) == 27
    with pytest.raises(ConfigurationError):
        enumerate_levels([("a", 99), ("b", 99), ("c", 99)], max_count=1000)


@given(st.lists(st.integers(0, 4), max_size=4))
def test_enumerate_levels_count(bounds):
    ideals = [(f"q{i}", b) for i, b in enumerate(bounds)]
    levels = enumerate_levels(ideals)
    assert len(levels) == math.prod(b + 1 for b in bounds)
    assert len({tuple(sorted(lv.items())) for lv in levels}) == len(levels)


def test_support_ideals_for_congruent_curve():
    c = curve("cong25")
    support = build_support(tower_for("cong25"), c.model, sequence("cong25"), 2)
    assert support_ideals(support) == [("2.0", 8), ("5.0", 2)]


def test_congruence_bound_rational_example():
    f = form([0, 1], {"5.0": (5, [2])})
    cb = congruence_bound(5, f, "5.0")
    assert (cb.norm_minus, cb.norm_plus) == (4, 8)
    assert cb.primes == {2}


def test_congruence_bound_zero_eigenvalue():
    f = form([-2, 0, 1], {"5.0": (5, [0, 0])})
    cb = congruence_bound(5, f, "5.0")
    assert cb.norm_minus == cb.norm_plus == 36


def test_congruence_bound_quadratic_example():
    f = form([-2, 0, 1], {"5.0": (5, [0, 1])})
    cb = congruence_bound(5, f, "5.0")
    assert cb.norm_minus == cb.norm_plus == 34
    assert cb.primes == {2, 17}


@given(st.integers(-50, 50), st.integers(-50, 50))
def test_hecke_norm_quadratic_form(a, b):
    f = form([-2, 0, 1], {})
    assert hecke_norm(f, [Fraction(a), Fraction(b)]) == a * a - 2 * b * b


def test_congruence_primes_divide_a_norm():
    f = form([-2, 0, 1], {"11.0": (11, [1, 2])})
    cb = congruence_bound(11, f, "11.0")
    for p in cb.primes:
        assert cb.norm_minus.numerator % p == 0 or cb.norm_plus.numerator % p == 0
    assert cb.norm_minus and cb.norm_plus


def test_missing_eigenvalue_is_incomplete():
    f = form([0, 1], {"3.0": (3, [0])})
    with pytest.raises(IncompleteReportError):
        congruence_bound(5, f, "5.0")


def test_ramanujan_violation_detected():
    assert form([0, 1], {"5.0": (5, [5])}).ramanujan_violations() == ["5.0"]
    assert form([-2, 0, 1], {"5.0": (5, [0, 1])}).ramanujan_violations() == []


def test_malformed_form_is_data_error():
    with pytest.raises(DataError):
        EigenformData.from_json({"label": "x", "hecke_poly": [1], "level": [], "ap": []})
    with pytest.raises(DataError):
        EigenformData.from_json({"label": "x"})


def test_config_validation():
    with pytest.raises(ConfigurationError):
        BoundConfig(0)
    with pytest.raises(ConfigurationError):
        BoundConfig(1, assume_modularity=False)
    assert BoundConfig(1, assume_modularity=False, kappa1=9).effective_kappa1 == 9
    assert BoundConfig(1).effective_kappa1 == 0


def _cong_support():
    c = curve("cong25")
    return build_support(tower_for("cong25"), c.model, sequence("cong25"), 2)


def test_assemble_without_forms():
    support = _cong_support()
    report = assemble_bound(BoundConfig(1), support, support.kappa, [])
    assert report.kappa2 == 5
    assert report.kappa_prime == max(4, 1, 1, 11, support.kappa.kappa, 0, 5)
    assert report.final_bound == report.kappa_prime
    assert len(report.gaps) == report.levels_enumerated == 27


def test_assemble_with_single_rational_form():
    support = _cong_support()
    f = form([0, 1], {"11.0": (11, [4])}, level=(("2.0", 5),))
    report = assemble_bound(BoundConfig(1), support, support.kappa, [f])
    assert report.form_bounds["f"].primes == {2}
    assert report.final_bound == report.kappa_prime
    assert len(report.gaps) == 26
    assert {"2.0": 5} not in report.gaps


@given(st.integers(1, 100), st.integers(1, 100))
def test_assemble_is_monotone_in_c_l(c1, c2):
    support = _cong_support()
    lo, hi = sorted((c1, c2))
    f = form([-2, 0, 1], {"11.0": (11, [1, 1])})
    a = assemble_bound(BoundConfig(lo), support, support.kappa, [])
    b = assemble_bound(BoundConfig(hi), support, support.kappa, [f])
    assert a.final_bound <= b.final_bound


def test_ramanujan_violating_form_rejected():
    support = _cong_support()
    f = form([0, 1], {"11.0": (11, [12])})
    with pytest.raises(DataError):
        assemble_bound(BoundConfig(1), support, support.kappa, [f])
