import math

import pytest
from hypothesis import given, strategies as st

from unilab.errors import ValidationError
from unilab.operators import WeightedShift
from unilab.universality import (
    TailRule,
    Verdict,
    build_interleaved,
    check_theorem1,
    classify_bilateral,
    classify_unilateral,
    interleaved_shift,
    mixing_necessity_probe,
    shift_orbit,
    smallest_exponent_above,
)

GEO = TailRule.parse("geometric:0.5")


@given(st.floats(1.1, 8.0), st.sampled_from([1.0, 2.0, 3.5]))
def test_constant_weights_above_one_are_universal(c, p):
    v = classify_unilateral(lambda n: c, p, 64, TailRule.geometric(c**-p))
    assert v.universal is Verdict.YES
    exact = c**-p / (1 - c**-p)
    assert abs(v.partial_sum + v.tail_bound - exact) <= 1e-9 * exact + v.tail_bound


@given(st.floats(0.2, 1.0))
def test_weights_at_most_one_are_not_universal(c):
    assert classify_unilateral(lambda n: c, 2.0, 64, GEO).universal is Verdict.NO


def test_no_certificate_is_inconclusive():
    v = classify_unilateral(lambda n: 2.0, 2.0, 64, TailRule.none())
    assert v.universal is Verdict.INCONCLUSIVE


def test_ratio_weights_need_power_above_one_over_p():
    # w_n = ((n+1)/n)^s gives w_1...w_n = (n+1)^s: summable iff s p > 1
    exact = [classify_unilateral(lambda n, s=s: ((n + 1) / n) ** s, 2.0, 64, TailRule.explicit(1.0)) for s in (0.25, 2.0)]
    assert exact[1].universal is Verdict.YES


def test_c0_readings_disagree_on_growth():
    proof = classify_unilateral(lambda n: 2.0, None, 64, TailRule.monotone_growth(1.0))
    assert proof.universal is Verdict.YES
    stmt = classify_unilateral(lambda n: 2.0, None, 64, TailRule.monotone_growth(1.0), c0_reading="statement")
    assert stmt.universal is not Verdict.YES


def test_bilateral_needs_both_sides():
    assert classify_bilateral(lambda n: 2.0, 2.0, 64, GEO).universal is Verdict.NO
    v = classify_bilateral(lambda n: 2.0 if n >= 1 else 0.5, 2.0, 64, GEO)
    assert v.universal is Verdict.YES and abs(v.partial_sum - 2 / 3) <= 1e-12


def test_validation():
    with pytest.raises(ValidationError):
        classify_unilateral(lambda n: 2.0, 2.0, 4, GEO)
    with pytest.raises(ValidationError):
        TailRule.parse("geometric:1.5")
    with pytest.raises(ValidationError):
        TailRule.parse("sideways")


@given(st.floats(1e-300, 1e300))
def test_smallest_exponent_above(x):
    n = smallest_exponent_above(x)
    assert 2.0**n > x >= 2.0 ** (n - 1)


def test_theorem1_on_2B():
    S = WeightedShift.constant(2.0, 64)
    rep = check_theorem1(shift_orbit(S, 20), S, tail_rule=GEO)
    assert rep.verdicts == {"a": "pass", "b": "pass", "c": "pass"}
    assert rep.hypB["F"] == [0]


def test_theorem1_on_B_fails_summability():
    S = WeightedShift.constant(1.0, 64)
    rep = check_theorem1(shift_orbit(S, 20), S, tail_rule=GEO)
    assert rep.verdicts["c"] != "pass"


def test_interleaved_builder_general_norms():
    s = build_interleaved([1.0, 2.0, 0.5, 1.5, 1.0, 3.0, 1.0, 1.0], [1.0, 0.5, 2.0, 1.0, 1.0, 1.0, 2.0], K=6)
    # n_0 = 0 is fixed, so only blocks k >= 1 are governed by the schedule
    assert all(b <= 3 * 2.0**-k for k, b in enumerate(s.blockSums) if k >= 1)
    assert list(s.nk) == sorted(set(s.nk))
    assert math.isfinite(s.exactSeries)


def test_interleaved_shift_is_hypercyclic_candidate():
    S = interleaved_shift(build_interleaved(1.0, 1.0, K=4))
    assert S.hi - 1 >= 33
    assert mixing_necessity_probe(S, 5) == 1 / (2 * abs(S.product(5)))
