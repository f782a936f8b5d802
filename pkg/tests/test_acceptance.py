"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Tolerances and runtime budgets are pinned to the values of the acceptance
table.  A criterion that does not hold fails here; nothing is relaxed.
"""

from __future__ import annotations

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from unilab.eigenfields import (
    eigen_residual,
    field_example1,
    field_kalish,
    fourier_coeff,
    kalish_closed_form_z,
    kalish_exact_pairing,
    pairing_values,
    trig_poly_pairing,
)
from unilab.ergodic import (
    BernoulliShift,
    DoublingMap,
    FactorMapConfig,
    StepFunction,
    correlation,
    decay_bound,
    intertwining_residual,
    pushforward,
)
from unilab.errors import ConstructionFailed
from unilab.operators import (
    AdjointMultiplier,
    WeightedShift,
    apply_shift,
    backward_orbit,
    orbit_vector,
    reproducing_kernel,
)
from unilab.rokhlin import (
    Cylinder,
    base_family,
    build_full_tower,
    build_small_tower,
    expansion_coefficients,
    initial_state,
    refine_step,
    separate_scalars,
    split_scalars,
    verify_properties,
)
from unilab.spaces import GridFunction, SeqVector, dual_pair, exactly_equal, max_abs_diff, scale
from unilab.universality import (
    TailRule,
    Verdict,
    build_interleaved,
    check_theorem1,
    classify_bilateral,
    classify_unilateral,
    shift_orbit,
)


@pytest.fixture
def verdict(capsys):
    """``verdict(criterion, checks, seconds, budget)``: print one line, then assert."""

    def _report(number: int, checks: dict[str, bool], seconds: float, budget: float) -> None:
        checks = {**checks, f"runtime<{budget:g}s": seconds < budget}
        failed = [k for k, ok in checks.items() if not ok]
        status = "PASS" if not failed else "FAIL"
        line = f"[criterion {number:2d}] {status}  ({seconds:.2f}s)"
        if failed:
            line += "  failed: " + ", ".join(failed)
        with capsys.disabled():
            print("\n" + line)
        assert not failed, line

    return _report


def test_criterion_01_shift_classifier(verdict):
    t0 = time.perf_counter()
    geo = TailRule.parse("geometric:0.5")
    two = classify_unilateral(lambda n: 2.0, 2.0, 64, geo)
    one = classify_unilateral(lambda n: 1.0, 2.0, 64, geo)
    bil = classify_bilateral(lambda n: 2.0 if n >= 1 else 0.5, 2.0, 64, geo)
    dt = time.perf_counter() - t0
    verdict(
        1,
        {
            "w=2 Yes": two.universal is Verdict.YES,
            "w=2 sum 1/3": abs(two.partial_sum - 1 / 3) <= 1e-12,
            "w=1 No": one.universal is Verdict.NO,
            "bilateral Yes": bil.universal is Verdict.YES,
            "bilateral sum 2/3": abs(bil.partial_sum - 2 / 3) <= 1e-12,
        },
        dt,
        1.0,
    )


def test_criterion_02_backward_orbit_bitwise(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(20260101)
    exact_sequences = 0
    for _ in range(20):
        S = WeightedShift(rng.uniform(0.5, 3.0, size=64))
        z = [backward_orbit(S, n) for n in range(65)]
        if all(exactly_equal(apply_shift(S, z[n]), z[n - 1]) for n in range(1, 65)):
            exact_sequences += 1
    e0 = exactly_equal(z[0], SeqVector.basis(0, S.tag))
    dt = time.perf_counter() - t0
    verdict(2, {"z_0 = e_0": e0, f"bitwise {exact_sequences}/20": exact_sequences == 20}, dt, 1.0)


def test_criterion_03_example1(verdict):
    t0 = time.perf_counter()
    field = field_example1(2.0, 40, 128)
    residual = eigen_residual(field)
    grid = fourier_coeff(field, 40, "grid")
    tag = field.samples[0].tag
    table_err = max(
        max_abs_diff(grid.coeffs[n], scale(2.0**-n, SeqVector.basis(n + 1, tag))) for n in range(-1, 40)
    )
    off_err = max(max_abs_diff(grid.coeffs[n], SeqVector.zeros(tag)) for n in range(-40, -1))
    exact = fourier_coeff(field, 40, "analytic")
    A = field.operator
    z = {n: exact.coeffs[-n] for n in range(-39, 3)}
    chain = all(exactly_equal(A.apply(z[n]), z[n + 1]) for n in range(-39, 2))
    z2_zero = bool(np.all(z[2].entries == 0))
    dt = time.perf_counter() - t0
    verdict(
        3,
        {
            "residual<=1e-9": residual <= 1e-9,
            "table 2^-n e_{n+1} to 1e-12": table_err <= 1e-12,
            "table zero below -1": off_err <= 1e-12,
            "A z_n = z_{n+1} exactly": chain,
            "z_2 = 0 exactly": z2_zero,
        },
        dt,
        2.0,
    )


def test_criterion_04_kalish(verdict):
    t0 = time.perf_counter()
    M = 4096
    E = field_kalish(M)
    F = field_kalish(M, renormalized=True)
    residual = eigen_residual(E)
    f0 = GridFunction.from_callable(lambda t: np.exp(1j * t), M)
    lam = F.lambdas
    formula = (lam - np.conj(lam)) / (2j * np.pi)
    grid = pairing_values(F, f0, "inner")
    semi = kalish_exact_pairing(M, 1, True, "inner")
    table = fourier_coeff(F, 8, "analytic")
    closed = max(max_abs_diff(kalish_closed_form_z(n, M), table.coeffs[n]) for n in range(-8, 9))
    tp = trig_poly_pairing(F, f0, 1e-9, pairing="inner", values=semi)
    dt = time.perf_counter() - t0
    verdict(
        4,
        {
            "E residual<=0.05": residual <= 0.05,
            "pairing formula grid 1e-3": float(np.max(np.abs(grid - formula))) <= 1e-3,
            "pairing formula semi-analytic 1e-12": float(np.max(np.abs(semi - formula))) <= 1e-12,
            "closed-form z_n 1e-12": closed <= 1e-12,
            f"support {tp.supportSet} == (-1, 1)": tuple(tp.supportSet) == (-1, 1),
        },
        dt,
        10.0,
    )


def test_criterion_05_reproducing_kernel(verdict):
    t0 = time.perf_counter()
    T = AdjointMultiplier([0.0, 0.0, 1.0], 60)
    k = reproducing_kernel(0.5, 60)
    lhs = T.apply(k)
    err = float(np.max(np.abs(lhs.window(0, 59) - 0.25 * k.window(0, 59))))
    dt = time.perf_counter() - t0
    verdict(5, {"M*k_z = 0.25 k_z on 0..58 to 1e-12": err <= 1e-12}, dt, 1.0)


def test_criterion_06_factor_map(verdict):
    t0 = time.perf_counter()
    system = DoublingMap(bits=64)
    f = StepFunction.first_digit()
    S = WeightedShift.constant(2.0, 64)
    cfg = FactorMapConfig.from_shift(S, 48, 1, False)
    inter = intertwining_residual(f, cfg, system, 10_000, 0)
    push = pushforward(f, cfg, system, 10_000, 1)
    mean, se = push.second_moment()
    mass, _ = push.ball_mass(SeqVector.zeros(cfg.tag), 3.0)
    cov, cse = push.covariance_pairing(SeqVector.basis(0, cfg.tag), SeqVector.basis(1, cfg.tag))
    dt = time.perf_counter() - t0
    verdict(
        6,
        {
            "intertwining<=1e-12": inter.max_residual <= 1e-12,
            "second moment 3 sigma of 2/3": abs(mean - 2 / 3) <= 3 * se,
            "ball mass 1": mass == 1.0,
            "covariance 3 sigma of 1/8": abs(cov - 1 / 8) <= 3 * cse,
        },
        dt,
        30.0,
    )


def test_criterion_07_correlation_decay(verdict):
    t0 = time.perf_counter()
    sin = lambda x: np.sin(2 * np.pi * x)  # noqa: E731
    c0 = correlation(sin, sin, 0, "montecarlo", 10**6, 0)
    checks = {"C_0 3 sigma of 1/2": abs(c0.value - 0.5) <= 3 * c0.stdError}
    for n in range(1, 11):
        c = correlation(sin, sin, n, "montecarlo", 10**6, n)
        bound = 2.0**-n * math.pi * math.sqrt(2) / math.sqrt(3)
        assert math.isclose(decay_bound(n, 1 / math.sqrt(2), 2 * math.pi), bound, rel_tol=1e-15)
        checks[f"|C_{n}| bound"] = abs(c.value) <= bound + 3 * c.stdError
    rng = np.random.default_rng(7)
    worst = 0.0
    for i in range(20):
        bf, bg = (int(b) for b in rng.integers(1, 7, size=2))
        f = StepFunction(bf, rng.normal(size=2**bf))
        g = StepFunction(bg, rng.normal(size=2**bg) + 1j * rng.normal(size=2**bg))
        n = int(rng.integers(0, 9))
        ex = correlation(f, g, n, "exact")
        mc = correlation(f, g, n, "montecarlo", 200_000, 1000 + i)
        worst = max(worst, abs(ex.value - mc.value) / mc.stdError)
    checks[f"exact vs montecarlo 4 sigma (worst {worst:.2f})"] = worst <= 4.0
    dt = time.perf_counter() - t0
    verdict(7, checks, dt, 60.0)


def _oracle_schedule(K: int) -> list[int]:
    """Smallest integers by exhaustive search, in exact rational arithmetic."""
    w = [Fraction(1, 2**k) for k in range(K + 1)]  # unit norms: w_k = w'_k = 2^-k
    nk = [0]
    for k in range(1, K + 1):
        W = math.prod(w[1 : k + 1])
        first = Fraction(2 ** (nk[-1] + 2)) / w[k]
        second = Fraction(2 ** (3 * k)) / (W * W)
        n = nk[-1] + 1
        while not (2**n > first and 2**n > second):
            n += 1
        nk.append(n)
    return nk


def test_criterion_08_interleaved_builder(verdict):
    t0 = time.perf_counter()
    s = build_interleaved(1.0, 1.0, K=6)
    oracle = _oracle_schedule(6)
    w = [Fraction(1, 2**k) for k in range(7)]
    tight = True
    for k in range(1, 7):
        W = math.prod(w[1 : k + 1])
        n = s.nk[k] - 1
        ok = n > s.nk[k - 1] and 2**n > Fraction(2 ** (s.nk[k - 1] + 2)) / w[k] and 2**n > Fraction(2 ** (3 * k)) / (W * W)
        tight &= not ok
    dt = time.perf_counter() - t0
    verdict(
        8,
        {
            "n_k = (6,13,22,33,46,61)": tuple(s.nk[1:]) == (6, 13, 22, 33, 46, 61),
            "matches oracle": list(s.nk) == oracle,
            "C_k = 1": all(c == 1.0 for c in s.Ck),
            "blockSum_k <= 3 2^-k": all(b <= 3 * 2.0**-k for k, b in enumerate(s.blockSums)),
            "totalSum <= 6": s.totalSum <= 6,
            "decrement violates": tight,
        },
        dt,
        1.0,
    )


def test_criterion_09_lemma0(verdict):
    t0 = time.perf_counter()
    base = base_family([0.0, 1.0], [-1, 0, 1], [1.0, 2.0, 1.0], 2, 1)
    ok_sep = ok_split = True
    worst_retries = 0
    for seed in range(100):
        towered = separate_scalars(base, 0.05, seed)
        split = split_scalars(towered, 0.05, seed)
        for fam in (towered, split):
            c = fam.certificate
            worst_retries = max(worst_retries, c.retries)
            good = c.passed and c.min_gap > 0 and c.checked_tuples == c.tuples * (c.tuples - 1) and c.retries <= 10
            if fam is towered:
                ok_sep &= good
            else:
                ok_split &= good
    dt = time.perf_counter() - t0
    verdict(
        9,
        {"separateScalars 100 seeds": ok_sep, "splitScalars 100 seeds": ok_split, f"retries {worst_retries}<=10": worst_retries <= 10},
        dt,
        10.0,
    )


def test_criterion_10_rokhlin_towers(verdict):
    t0 = time.perf_counter()
    bern = BernoulliShift()
    small = build_small_tower(bern, 8, 0.1, seed=0, samples=100_000)
    full = build_full_tower(bern, 12, 1, 0.15, seed=1, samples=100_000)
    dt = time.perf_counter() - t0
    verdict(
        10,
        {
            "small mass<=0.1": small.empirical <= 0.1 and small.mass <= 0.1,
            "small 0 violations": small.violations == 0 and small.samples == 100_000,
            "full Wilson lower>=0.85": full.mass_ci[0] >= 0.85,
        },
        dt,
        30.0,
    )


def test_criterion_11_refinement_step(verdict):
    t0 = time.perf_counter()
    bern = BernoulliShift()
    S = WeightedShift.from_function(lambda n: 2.0 if n >= 1 else 0.5, -40, 41, side="bilateral")
    crit = check_theorem1(shift_orbit(S, 10), S, tail_rule=TailRule.parse("geometric:0.5"))
    F = crit.hypB["F"]
    cp = [dual_pair(crit.functional, orbit_vector(S, -p)) for p in F]
    u = SeqVector.from_dict({0: 1.0, 1: 0.5}, S.tag)
    a = expansion_coefficients(u, S)
    small = build_small_tower(bern, 8, 0.1, 0)
    full = build_full_tower(bern, 8, max(abs(p) for p in F), 0.1, 1)
    st0 = initial_state(F, cp)
    st1 = refine_step(st0, a, small, full, Cylinder.parse({"0": 1}), 1e-3, 0.05, 2)
    cfg = FactorMapConfig.from_shift(S, 8, invertible_form=True)
    rep = verify_properties(st1, st0, cfg, 10_000, 3, crit.functional)
    dt = time.perf_counter() - t0
    checks = {f"({p.name})": p.passed for p in rep.properties}
    names = {p.name for p in rep.properties}
    checks["all six items run"] = {"1", "2b", "3c", "4b", "4c", "6c"} <= names
    verdict(11, checks, dt, 60.0)


def test_criterion_12_theorem1_on_2B(verdict):
    t0 = time.perf_counter()
    S = WeightedShift.constant(2.0, 64)
    rep = check_theorem1(shift_orbit(S, 20), S, basis_count=17, tail_rule=TailRule.parse("geometric:0.5"))
    dt = time.perf_counter() - t0
    js = [j for j, _ in rep.hypA]
    verdict(
        12,
        {
            "hypA e_0..e_16 <= 1e-10": js == list(range(17)) and max(r for _, r in rep.hypA) <= 1e-10,
            "hypB F={0}": list(rep.hypB["F"]) == [0],
            "off-F <= 1e-14": rep.hypB["offFPairings"] <= 1e-14,
            "hypC absSum <= 2": rep.hypC["absSum"] <= 2,
            "geometric tail": "geometric" in rep.hypC["backward"]["reason"] and rep.verdicts["c"] == "pass",
        },
        dt,
        2.0,
    )


def test_criterion_10_error_path():
    """Full tower with d = M cannot cover anything; construction must refuse."""
    with pytest.raises(ConstructionFailed):
        build_full_tower(BernoulliShift(), 4, 4, 0.15, seed=0, samples=1000)
