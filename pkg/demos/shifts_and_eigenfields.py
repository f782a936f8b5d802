"""Weighted shifts, their universality verdicts, and eigenvectorfields.

Run with ``python3 demos/shifts_and_eigenfields.py``.
"""

import numpy as np

from unilab.eigenfields import (
    eigen_residual,
    field_example1,
    field_kalish,
    fourier_coeff,
    kalish_exact_pairing,
    trig_poly_pairing,
)
from unilab.operators import WeightedShift
from unilab.spaces import GridFunction, SeqVector
from unilab.universality import TailRule, check_theorem1, classify_unilateral, shift_orbit

geo = TailRule.parse("geometric:0.5")

# 2B is universal, B is not: the series of 1 / |w_1...w_n|^2 decides.
for c in (2.0, 1.0):
    v = classify_unilateral(lambda n: c, 2.0, 64, geo)
    print(f"w = {c}: {v.universal.value:4s} partial sum {v.partial_sum:.15f}")

# The orbit hypotheses on 2B, with the functional found by the scan.
S = WeightedShift.constant(2.0, 64)
rep = check_theorem1(shift_orbit(S, 20), S, tail_rule=geo)
print("hypotheses", rep.verdicts, "F =", rep.hypB["F"], "orbit sum", rep.hypC["absSum"])

# alpha B has the eigenvectorfield sum (lambda/alpha)^(n-1) e_n.
E = field_example1(2.0, 40, 128)
table = fourier_coeff(E, 4, "analytic")
print("example 1 residual", eigen_residual(E))
for n in range(-1, 3):
    c = table.coeffs[n]
    print(f"  E^({n}) =", " + ".join(f"{v.real:g} e_{c.lo + i}" for i, v in enumerate(c.entries) if v))
print("  pairing with e_1* has support", trig_poly_pairing(E, SeqVector.basis(1), 1e-9).supportSet)

# The Kalish operator: an indicator field, renormalised by (1 - lambda).
M = 4096
print("Kalish residual", eigen_residual(field_kalish(M)))
F = field_kalish(M, renormalized=True)
f0 = GridFunction.from_callable(lambda t: np.exp(1j * t), M)
exact = kalish_exact_pairing(M)
tp = trig_poly_pairing(F, f0, 1e-9, pairing="inner", values=exact)
print("  <f0, F(lambda)> coefficients x 2i pi:")
for n in tp.supportSet:
    print(f"    n = {n:2d}: {(tp.pairingCoeffs[n] * 2j * np.pi).real:+.6f}")
# the pairing is (2 - lambda - conj(lambda)) / (2 i pi): still a non-zero
# trigonometric polynomial, which is what the criterion needs
