"""Rokhlin towers on the Bernoulli shift and one refinement step.

Run with ``python3 demos/rokhlin_refinement.py`` (about ten seconds).
"""

from unilab.ergodic import BernoulliShift, FactorMapConfig
from unilab.operators import WeightedShift, orbit_vector
from unilab.rokhlin import (
    Cylinder,
    build_full_tower,
    build_small_tower,
    expansion_coefficients,
    initial_state,
    refine_step,
    verify_properties,
)
from unilab.spaces import SeqVector, dual_pair
from unilab.universality import TailRule, check_theorem1, shift_orbit

bern = BernoulliShift()
small = build_small_tower(bern, 8, 0.1, seed=0)
print(f"small tower: marker {small.pattern}, mass bound {small.mass:.4f}, sampled {small.empirical:.4f}, "
      f"violations {small.violations}")
full = build_full_tower(bern, 8, 0, 0.1, seed=1)
print(f"full tower: marker length {full.L}, coverage {full.empirical:.4f}, Wilson lower {full.mass_ci[0]:.4f}")

# The invertible operator S_w with weights 2 (n >= 1) and 1/2 (n <= 0).
S = WeightedShift.from_function(lambda n: 2.0 if n >= 1 else 0.5, -40, 41, side="bilateral")
crit = check_theorem1(shift_orbit(S, 10), S, tail_rule=TailRule.parse("geometric:0.5"))
F = crit.hypB["F"]
cp = [dual_pair(crit.functional, orbit_vector(S, -p)) for p in F]

# Refine f_0 = 0 towards u = e_0 + e_1 / 2.
u = SeqVector.from_dict({0: 1.0, 1: 0.5}, S.tag)
st0 = initial_state(F, cp)
st1 = refine_step(st0, expansion_coefficients(u, S), small, full, Cylinder.parse({"0": 1}), 1e-3, 0.05, seed=2)
print("range of f_1 has", len(st1.range), "values")

rep = verify_properties(st1, st0, FactorMapConfig.from_shift(S, 8, invertible_form=True), 10_000, 3, crit.functional)
for p in rep.properties:
    print(f"  ({p.name}) {'pass' if p.passed else 'FAIL'}")
