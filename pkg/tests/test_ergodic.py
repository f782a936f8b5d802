import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from unilab.errors import BitBudgetExhausted, NonInvertibleError, ValidationError
from unilab.ergodic import (
    BernoulliShift,
    DoublingMap,
    FactorMapConfig,
    Rotation,
    StepFunction,
    correlation,
    evaluate,
    intertwining_residual,
    iterate,
    phi_f,
    pushforward,
    sample_mu,
    to_float,
    visit_lower_density,
)
from unilab.operators import WeightedShift
from unilab.spaces import SeqVector, norm


def test_doubling_map_drops_digits():
    x = np.array([[1, 0, 1, 1]], dtype=np.uint8)
    assert to_float(iterate(DoublingMap(bits=4), x, 1))[0] == 0.375
    with pytest.raises(NonInvertibleError):
        iterate(DoublingMap(), x, -1)
    with pytest.raises(BitBudgetExhausted):
        iterate(DoublingMap(bits=4, guard=2), x, 3)


def test_bernoulli_shift_is_coordinate_shift():
    x = sample_mu(BernoulliShift(), 16, 3)
    y = iterate(BernoulliShift(), x, 5)
    assert np.array_equal(y.bits(0, 20), x.bits(5, 25))
    assert np.array_equal(iterate(BernoulliShift(), y, -5).bits(-3, 3), x.bits(-3, 3))


def test_bernoulli_bits_are_fair():
    bits = sample_mu(BernoulliShift(), 20_000, 0).bits(0, 8)
    assert abs(bits.mean() - 0.5) <= 4 * 0.5 / math.sqrt(bits.size)


def test_sampling_reproducible():
    a = sample_mu(DoublingMap(bits=32), 10, 42)
    b = sample_mu(DoublingMap(bits=32), 10, 42)
    assert np.array_equal(a, b)
    assert np.array_equal(sample_mu(Rotation(), 5, 1), sample_mu(Rotation(), 5, 1))


@given(st.lists(st.complex_numbers(max_magnitude=5), min_size=1, max_size=4))
def test_constant_step_function(vals):
    c = vals[0]
    f = StepFunction.constant(c)
    x = sample_mu(DoublingMap(bits=8), 4, 0)
    assert np.all(evaluate(DoublingMap(bits=8), f, x) == c)
    g = StepFunction.constant(c, bilateral=True)
    y = sample_mu(BernoulliShift(), 4, 0)
    assert np.all(evaluate(BernoulliShift(), g, y) == c)


def test_first_digit_statistics():
    f = StepFunction.first_digit()
    assert f.mean == 0.5 and math.isclose(f.l2, math.sqrt(0.5))


@given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 6), st.integers(0, 2**32))
@settings(max_examples=25, deadline=None)
def test_exact_and_quadrature_agree_on_steps(bf, bg, n, seed):
    rng = np.random.default_rng(seed)
    f = StepFunction(bf, rng.normal(size=2**bf))
    g = StepFunction(bg, rng.normal(size=2**bg))
    ex = correlation(f, g, n, "exact")
    qu = correlation(f, g, n, "quadrature", points=2 ** (n + max(bf, bg) + 1))
    assert abs(ex.value - qu.value) <= 1e-12


def test_exact_correlation_of_first_digit():
    f = StepFunction.first_digit()
    assert abs(correlation(f, f, 0, "exact").value - 0.25) <= 1e-15
    assert abs(correlation(f, f, 3, "exact").value) <= 1e-15


def test_trig_correlation_quadrature_vanishes():
    sin = lambda x: np.sin(2 * np.pi * x)  # noqa: E731
    assert abs(correlation(sin, sin, 0, "quadrature").value - 0.5) <= 1e-12
    assert abs(correlation(sin, sin, 2, "quadrature").value) <= 1e-12


def test_intertwining_on_doubling_map():
    S = WeightedShift.constant(2.0, 64)
    cfg = FactorMapConfig.from_shift(S, 40, 1)
    rep = intertwining_residual(StepFunction.first_digit(), cfg, DoublingMap(bits=64), 500, 0)
    assert rep.max_residual <= rep.bound and rep.max_residual <= 1e-11


def test_intertwining_on_bernoulli_invertible_form():
    S = WeightedShift.from_function(lambda n: 2.0 if n >= 1 else 0.5, -30, 31, side="bilateral")
    cfg = FactorMapConfig.from_shift(S, 20, invertible_form=True)
    f = StepFunction.from_table([0.0, 1.0], bilateral=True)
    rep = intertwining_residual(f, cfg, BernoulliShift(), 300, 2)
    assert rep.max_residual <= rep.bound


def test_phi_f_matches_batch_and_pushforward():
    S = WeightedShift.constant(2.0, 64)
    cfg = FactorMapConfig.from_shift(S, 30, 1)
    sys = DoublingMap(bits=64)
    x = sample_mu(sys, 3, 5)
    v = phi_f(sys, x[:1], StepFunction.first_digit(), cfg)
    push = pushforward(StepFunction.first_digit(), cfg, sys, 3, 5)
    # pushforward draws its states from the same seed
    width = push.points.shape[1]
    assert np.array_equal(push.points[0], v.window(push.lo, push.lo + width))
    assert norm(v) > 0


def test_visit_density_of_fixed_point():
    S = WeightedShift.constant(2.0, 8)
    lowest, final = visit_lower_density(S, SeqVector.zeros(), SeqVector.zeros(), 0.5, 10)
    assert lowest == final == 1.0
    with pytest.raises(ValidationError):
        visit_lower_density(S, SeqVector.zeros(), SeqVector.zeros(), 0.5, 0)
