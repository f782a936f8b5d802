import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from unilab.errors import GridMismatch, ValidationError, WindowExhausted
from unilab.operators import (
    AdjointMultiplier,
    KalishOperator,
    WeightedShift,
    apply_kalish,
    apply_power,
    apply_shift,
    backward_orbit,
    forward_orbit,
    reproducing_kernel,
)
from unilab.spaces import L2_FULL, GridFunction, SeqVector, exactly_equal, max_abs_diff, norm

weights = st.lists(st.floats(0.25, 4.0), min_size=1, max_size=30)


def test_backward_orbit_examples():
    S = WeightedShift.constant(2.0, 10)
    assert exactly_equal(backward_orbit(S, 3), SeqVector(S.tag, 3, [1 / 8]))
    assert exactly_equal(backward_orbit(S, 0), SeqVector.basis(0))
    T = WeightedShift.unilateral([n + 1.0 for n in range(1, 10)])
    z = backward_orbit(T, 3)
    assert abs(z[3] - 1 / 24) <= 1e-17
    assert max_abs_diff(apply_power(T, z, 3), SeqVector.basis(0)) <= 1e-15


def test_dyadic_weights_give_exact_chain():
    S = WeightedShift.constant(2.0, 64)
    assert all(exactly_equal(apply_shift(S, backward_orbit(S, n)), backward_orbit(S, n - 1)) for n in range(1, 65))


@given(weights)
def test_backward_orbit_inverts_up_to_rounding(w):
    S = WeightedShift.unilateral(w)
    for n in range(1, len(w) + 1):
        a, b = apply_shift(S, backward_orbit(S, n)), backward_orbit(S, n - 1)
        assert abs(a[n - 1] - b[n - 1]) <= 4e-16 * abs(b[n - 1])
        if S.backward_exact(n):
            assert exactly_equal(a, b)


def test_backward_e0_annihilated():
    S = WeightedShift.constant(3.0, 4)
    assert norm(apply_shift(S, SeqVector.basis(0))) == 0.0


def test_window_exhausted():
    S = WeightedShift.constant(2.0, 4)
    with pytest.raises(WindowExhausted):
        backward_orbit(S, 5)
    B = WeightedShift.constant(2.0, 3, side="bilateral")
    with pytest.raises(WindowExhausted):
        apply_shift(B, SeqVector.basis(-5, L2_FULL))


def test_zero_weight_rejected():
    with pytest.raises(ValidationError):
        WeightedShift.unilateral([1.0, 0.0])


def test_forward_orbit_of_2B():
    S = WeightedShift.constant(2.0, 8)
    assert norm(forward_orbit(S, 1)) == 0.0


@given(st.lists(st.tuples(st.floats(-2, 2), st.floats(-2, 2)), min_size=1, max_size=12), st.complex_numbers(max_magnitude=3))
@settings(max_examples=50)
def test_adjoint_multiplier_of_linear_symbol_is_shift(entries, alpha):
    c = SeqVector(SeqVector.basis(0).tag, 0, [complex(a, b) for a, b in entries])
    N = len(entries) + 2
    T = AdjointMultiplier([0, alpha], N)
    S = WeightedShift.constant(np.conj(alpha) if alpha != 0 else 1.0, N + 1)
    if alpha == 0:
        assert norm(T.apply(c)) == 0.0
        return
    assert max_abs_diff(T.apply(c), apply_shift(S, c)) <= 1e-12 * (1 + norm(c))


@pytest.mark.parametrize("z", [0.5, 0.3 + 0.4j, -0.7j])
def test_kernel_eigenvector(z):
    coeffs = [1.0, -2.0, 0.5j]
    T = AdjointMultiplier(coeffs, 80)
    k = reproducing_kernel(z, 80)
    hi = 80 + 1 - T.degree
    lhs = T.apply(k).window(0, hi)
    assert np.max(np.abs(lhs - np.conj(T.symbol(z)) * k.window(0, hi))) <= 1e-12


def test_kalish_constant_function_rate():
    errs = []
    for M in (1024, 2048, 4096):
        K = KalishOperator(M)
        one = GridFunction(np.ones(M))
        d = apply_kalish(K, one).values - 1.0
        errs.append(np.sqrt(np.mean(np.abs(d) ** 2)))
    for a, b in zip(errs, errs[1:]):
        assert 0.4 <= b / a <= 0.6


def test_kalish_zero_and_grid_mismatch():
    K = KalishOperator(16)
    assert np.all(apply_kalish(K, GridFunction(np.zeros(16))).values == 0)
    with pytest.raises(GridMismatch):
        apply_kalish(K, GridFunction(np.zeros(32)))
    with pytest.raises(ValidationError):
        KalishOperator(8)
