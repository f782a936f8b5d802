import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from unilab.eigenfields import (
    eigen_residual,
    field_example1,
    field_example3,
    field_kalish,
    fourier_coeff,
    kalish_closed_form_z,
    kalish_exact_pairing,
    kalish_y,
    pairing_values,
    roots_of_unity,
    synthesize,
    trig_poly_pairing,
)
from unilab.errors import ValidationError
from unilab.spaces import GridFunction, SeqVector, inner_product, max_abs_diff, sub


@given(st.floats(1.2, 5.0), st.floats(0, 2 * np.pi))
@settings(max_examples=20, deadline=None)
def test_example1_residual_is_truncation_tail(r, arg):
    alpha = r * np.exp(1j * arg)
    K = 30
    field = field_example1(alpha, K, 64)
    assert eigen_residual(field) <= 2 * abs(alpha) ** -(K - 1) + 1e-12


def test_example1_roundtrip_through_fourier_table():
    field = field_example1(2.0, 20, 64)
    back = synthesize(fourier_coeff(field, 30, "grid"), 64)
    assert max(max_abs_diff(a, b) for a, b in zip(back, field.samples)) <= 1e-12


def test_example1_dual_pairing_is_monomial():
    field = field_example1(2.0, 20, 64)
    tp = trig_poly_pairing(field, SeqVector.basis(1), 1e-9)
    assert tp.supportSet == (0,)


def test_example3_two_combs_and_gluing():
    alpha = 2.0
    K = 40
    E2 = field_example3(alpha, None, K, 128)
    assert max_abs_diff(E2.samples[5], E2.parts["E2"].samples[5]) == 0.0
    glued = field_example3(alpha, (1.0, 2.5), K, 128)
    bound = 3 * alpha * (1 / alpha) ** (K / 2)
    assert eigen_residual(glued.parts["E1"]) <= bound
    assert eigen_residual(glued.parts["E2"]) <= bound
    # the glued field mixes two eigenvectors of the same eigenvalue
    assert eigen_residual(glued) <= bound
    with pytest.raises(ValidationError):
        field_example3(0.5, None, K, 128)


def test_kalish_residual_budget():
    assert eigen_residual(field_kalish(4096)) <= 0.05


def test_kalish_y_closed_forms():
    M = 512
    t = GridFunction.angles(M)
    assert np.allclose(kalish_y(0, M).values, t / (2 * np.pi))
    assert np.allclose(kalish_y(3, M).values, (1 - np.exp(-3j * t)) / (6j * np.pi))
    z = kalish_closed_form_z(4, M)
    assert max_abs_diff(z, sub(kalish_y(4, M), kalish_y(3, M))) <= 1e-15


def test_kalish_closed_form_matches_analytic_table():
    M = 1024
    table = fourier_coeff(field_kalish(M, renormalized=True), 8, "analytic")
    assert max(max_abs_diff(kalish_closed_form_z(n, M), table.coeffs[n]) for n in range(-8, 9)) <= 1e-12


def test_kalish_pairing_with_f0_direct_values():
    # <f0, F(lambda)> = (1 - lambda)(1 - conj(lambda)) / (2 i pi) exactly, so the
    # Fourier coefficients are 2, -1, -1 (over 2 i pi) at n = 0, 1, -1
    M = 4096
    f0 = GridFunction.from_callable(lambda t: np.exp(1j * t), M)
    c = {n: inner_product(f0, kalish_closed_form_z(n, M)) * 2j * np.pi for n in range(-5, 6)}
    assert abs(c[0] - 2) <= 2e-3 and abs(c[1] + 1) <= 2e-3 and abs(c[-1] + 1) <= 1e-12
    assert max(abs(c[n]) for n in c if abs(n) >= 2) <= 1e-12


def test_kalish_pairing_shifted_formula():
    M = 4096
    F = field_kalish(M, renormalized=True)
    lam = F.lambdas
    shifted = (2 - lam - np.conj(lam)) / (2j * np.pi)
    f0 = GridFunction.from_callable(lambda t: np.exp(1j * t), M)
    assert np.max(np.abs(pairing_values(F, f0, "inner") - shifted)) <= 1e-3
    assert np.max(np.abs(kalish_exact_pairing(M) - shifted)) <= 1e-12
    tp = trig_poly_pairing(F, f0, 1e-9, pairing="inner", values=kalish_exact_pairing(M))
    assert tp.supportSet == (-1, 0, 1)


def test_roots_of_unity():
    lam = roots_of_unity(16)
    assert lam[0] == 1 and np.allclose(lam**16, 1)
