import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from unilab.errors import BudgetExceeded, ConstructionFailed, ValidationError
from unilab.ergodic import BernoulliShift, sample_mu
from unilab.rokhlin import (
    NO_LEVEL,
    Cylinder,
    base_family,
    build_full_tower,
    build_small_tower,
    sample_base_points,
    separate_scalars,
    split_scalars,
)

BERN = BernoulliShift()


@pytest.fixture(scope="module")
def small():
    return build_small_tower(BERN, 8, 0.1, seed=0, samples=20_000)


@pytest.fixture(scope="module")
def full():
    return build_full_tower(BERN, 4, 1, 0.3, seed=0, samples=20_000)


def test_cylinder_basics():
    c = Cylinder.parse({"0": 1, "3": 0})
    assert c.mass == 0.25
    x = sample_mu(BERN, 4000, 1)
    inside = c.contains(x)
    bits = x.bits(0, 4)
    assert np.array_equal(inside, (bits[:, 0] == 1) & (bits[:, 3] == 0))
    with pytest.raises(ValidationError):
        Cylinder(((0, 1), (0, 0)))
    with pytest.raises(ValidationError):
        Cylinder(((0, 2),))


def test_small_tower_marker_length(small):
    assert small.pattern == "1" + "0" * 8
    assert small.mass == (2 * 8 + 1) * 2.0**-9 <= 0.1 / 2


def test_small_tower_levels_follow_the_shift(small):
    x = sample_base_points(small, 200, seed=4)
    for k in range(-8, 9):
        # x on the base means T^k x lies on level k
        assert np.all(small.levels(x.shifted(k)) == k)


def test_small_tower_disjoint(small):
    x = sample_mu(BERN, 20_000, 9)
    assert small.collisions(x) == 0


def test_full_tower_levels_agree_with_direct_test(full):
    x = sample_mu(BERN, 5000, 11)
    lv = full.levels(x)
    hits = full.hits(x)
    assert np.all(hits.sum(axis=1) <= 1)
    direct = np.where(hits.any(axis=1), -(np.argmax(hits, axis=1) - full.height), NO_LEVEL)
    assert np.array_equal(lv, direct)


def test_full_tower_coverage(full):
    assert full.mass_ci[0] >= 0.7


def test_full_tower_refuses_d_equal_M():
    with pytest.raises(ConstructionFailed):
        build_full_tower(BERN, 3, 3, 0.1, samples=1000)


@pytest.fixture(scope="module")
def base():
    return base_family([0.0, 1.0], [-1, 0, 1], [1.0, 2.0, 1.0], 2, 1)


@given(st.integers(0, 2**31))
@settings(max_examples=25, deadline=None)
def test_separation_certificates(seed):
    b = base_family([0.0, 1.0], [-1, 0, 1], [1.0, 2.0, 1.0], 2, 1)
    t = separate_scalars(b, 0.05, seed)
    s = split_scalars(t, 0.05, seed)
    for fam in (t, s):
        assert fam.certificate.passed and fam.certificate.min_gap > 0
    # perturbations stay within the budget
    assert np.max(np.abs(t.values - b.values[:, None])) <= 0.05
    assert np.max(np.abs(s.values - t.values[..., None])) <= 0.025


def test_separation_is_deterministic(base):
    a = separate_scalars(base, 0.05, 17)
    b = separate_scalars(base, 0.05, 17)
    assert np.array_equal(a.values, b.values)


def test_separation_budget_and_degenerate_coefficients():
    big = base_family(list(range(7)), [-1, 0, 1], [1.0, 2.0, 1.0], 2, 1)
    with pytest.raises(BudgetExceeded):
        separate_scalars(big, 0.05)
    zero = base_family([0.0, 1.0], [-1, 0, 1], [0.0, 0.0, 0.0], 2, 1)
    with pytest.raises(ConstructionFailed):
        separate_scalars(zero, 0.05)


def test_initial_state_requires_zero_in_F():
    from unilab.rokhlin import initial_state

    with pytest.raises(ValidationError):
        initial_state([1, 2], [1.0, 1.0])
    st0 = initial_state([0], [1.0])
    assert st0.n == 0 and st0.range == frozenset({0j})
