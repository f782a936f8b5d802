import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from unilab.errors import GridMismatch, TagMismatch, ValidationError
from unilab.spaces import (
    L2_FULL,
    L2_HALF,
    GridFunction,
    SeqVector,
    SpaceTag,
    add,
    axpy,
    coordinate_functional,
    dual_pair,
    exactly_equal,
    inner_product,
    norm,
    scale,
    sub,
    tail_norm,
)

finite = st.floats(-1e3, 1e3, allow_nan=False)
cplx = st.builds(complex, finite, finite)


@st.composite
def vectors(draw, tag=L2_HALF):
    lo = draw(st.integers(0 if tag.side == "half" else -10, 10))
    entries = draw(st.lists(cplx, max_size=12))
    return SeqVector(tag, lo, entries)


def test_tag_validation():
    with pytest.raises(ValidationError):
        SpaceTag.lp(0.5)
    with pytest.raises(ValidationError):
        SpaceTag(side="left")
    assert SpaceTag.c0() == SpaceTag(kind="c0", p=3.0)


def test_half_line_rejects_negative_index():
    with pytest.raises(ValidationError):
        SeqVector(L2_HALF, -1, [1.0])


def test_lp_and_c0_norms():
    v = SeqVector(L2_HALF, 0, [3.0, 4.0])
    assert norm(v) == 5.0
    assert norm(v.with_tag(SpaceTag.lp(1.0))) == 7.0
    assert norm(v.with_tag(SpaceTag.c0())) == 4.0


def test_tail_norm():
    v = SeqVector.from_dict({0: 1.0, 2: 3.0, 5: 4.0})
    assert tail_norm(v, 1) == 5.0
    assert tail_norm(v, 6) == 0.0


def test_mixing_tags_is_an_error():
    with pytest.raises(TagMismatch):
        add(SeqVector.basis(0, L2_HALF), SeqVector.basis(0, L2_FULL))


def test_grid_mismatch():
    with pytest.raises(GridMismatch):
        add(GridFunction(np.ones(4)), GridFunction(np.ones(8)))


def test_vectors_are_immutable():
    v = SeqVector(L2_HALF, 0, [1.0])
    with pytest.raises(ValueError):
        v.entries[0] = 2.0


def test_coordinate_functional_pairs_coordinates():
    f = coordinate_functional(1, 3)
    v = SeqVector.from_dict({1: 2.0, 2: 7.0, 3: 1j})
    assert dual_pair(f, v) == 2.0 + 1j


@given(vectors(), vectors())
def test_addition_commutes_exactly(x, y):
    assert exactly_equal(add(x, y), add(y, x))


@given(vectors(), vectors(), cplx)
def test_axpy_matches_scale_add(x, y, a):
    lhs, rhs = axpy(a, x, y), add(scale(a, x), y)
    assert np.allclose(lhs.window(-1, 30), rhs.window(-1, 30), rtol=1e-12, atol=1e-9)


@given(vectors())
def test_sub_self_is_zero(x):
    assert norm(sub(x, x)) == 0.0


@given(vectors(), vectors())
def test_triangle_inequality(x, y):
    assert norm(add(x, y)) <= norm(x) + norm(y) + 1e-9 * (1 + norm(x) + norm(y))


@given(vectors(), vectors())
def test_inner_product_hermitian(x, y):
    a, b = inner_product(x, y), inner_product(y, x)
    assert abs(a - b.conjugate()) <= 1e-9 * (1 + abs(a))


@given(vectors())
def test_inner_product_gives_square_norm(x):
    assert math.isclose(inner_product(x, x).real, norm(x) ** 2, rel_tol=1e-9, abs_tol=1e-9)


@given(vectors())
def test_json_roundtrip(x):
    assert exactly_equal(SeqVector.from_json(x.to_json()), x)
