import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.core.errors import DimensionMismatch, PointNotInSet, UnsupportedVariant
from src.sets.calculus import (
    minkowski_diff,
    minkowski_sum,
    output_set_chain,
    output_set_condition,
    pontryagin_diff,
    project_x,
    sampled_projection,
    to_polyhedron,
)
from src.sets.cones import Cone, cone_feasible, limit_direction_oracle, tangent_cone, unit_directions
from src.sets.set_expr import AffineOutputMap, Box, Complement, OutputForm, Polyhedron, Product, set_contains, set_margin

EX1_C = OutputForm(AffineOutputMap.identity(1), Box.interval(-1.5, 1.5))
W = Box.interval(-0.2, 0.2)


@st.composite
def boxes(draw, dim=2, max_width=3.0):
    lower = np.array(draw(st.lists(st.floats(-5.0, 5.0), min_size=dim, max_size=dim)))
    width = np.array(draw(st.lists(st.floats(0.0, max_width), min_size=dim, max_size=dim)))
    return Box(lower, lower + width)


def test_output_form_membership():
    assert EX1_C.contains([1.0, 0.2])
    jump_set = Complement(OutputForm(AffineOutputMap.identity(1), Box.interval(-1.0, 1.0, False, False)))
    assert not jump_set.contains([1.0, -0.2])
    assert jump_set.contains([1.2, 0.2])


def test_box_contains_its_vertices():
    box = Box([0.0, -1.0], [1.0, 2.0])
    for vertex in box.vertices():
        assert box.contains(vertex)


@pytest.mark.parametrize("x, expected", [(1.2, -0.3), (1.5, 0.0), (2.0, 0.5)])
def test_box_margin(x, expected):
    assert set_margin(Box.interval(-1.5, 1.5), [x]) == pytest.approx(expected)


def test_margin_of_open_set_is_unsupported():
    with pytest.raises(UnsupportedVariant):
        set_margin(Box.interval(-1.0, 1.0, False, False), [0.0])


def test_dimension_is_checked():
    with pytest.raises(DimensionMismatch):
        Box.interval(0.0, 1.0).contains([0.0, 0.0])


def test_projection_of_ex1_flow_set():
    C0 = project_x(EX1_C, W)
    assert C0 == Box.interval(-1.7, 1.7)


def test_projection_of_jump_set_complement():
    no_jump = OutputForm(AffineOutputMap.identity(1), Box.interval(-1.0, 1.0, False, False))
    assert project_x(no_jump, W) == Box.interval(-1.2, 1.2, False, False)


def test_projection_of_polyhedron_eliminates_the_input():
    M = Polyhedron([[1.0, 1.0]], [1.0])
    projection = project_x(M, Box.interval(-1.0, 1.0))
    assert projection.contains([2.0])
    assert not projection.contains([2.1])


def test_pontryagin_examples():
    assert pontryagin_diff(Box.interval(-1.5, 1.5), W) == Box.interval(-1.3, 1.3)
    A = Box.interval(-1.5, 1.5)
    assert pontryagin_diff(A, Box.point([0.0])) == A
    assert pontryagin_diff(Box.interval(-0.1, 0.1), W).is_empty


def test_minkowski_examples():
    assert minkowski_diff(Box.interval(-1.5, 1.5), W) == Box.interval(-1.7, 1.7)
    open_unit = Box.interval(-1.0, 1.0, False, False)
    assert minkowski_diff(open_unit, W) == Box.interval(-1.2, 1.2, False, False)
    A = Box([0.0, 1.0], [2.0, 3.0])
    assert minkowski_diff(A, Box.point([0.0, 0.0])) == A


def test_output_set_condition_examples():
    whole = Box.whole(1)
    open_unit = Box.interval(-1.0, 1.0, False, False)
    chain = output_set_chain(whole, Box.interval(-1.5, 1.5), open_unit, W)
    assert chain.holds
    assert chain.c_minus_w == Box.interval(-1.7, 1.7)
    assert chain.dc_minus_w == Box.interval(-1.2, 1.2, False, False)
    assert chain.rhs == Box.interval(-1.3, 1.3, False, False)
    assert not output_set_condition(whole, Box.interval(-1.0, 1.0), open_unit, W)
    assert output_set_condition(whole, Box.interval(-1.0, 1.0), open_unit, Box.point([0.0]))


def test_tangent_cone_examples():
    assert tangent_cone(Box.interval(0.0, 1.0), [0.0]).signs == ("nonneg",)
    assert tangent_cone(Box([0.0, 0.0], [1.0, 1.0]), [0.5, 0.5]).kind == Cone.WHOLE_SPACE
    cone = tangent_cone(EX1_C, [1.3, 0.2])
    assert cone.kind == Cone.POLYHEDRAL
    assert cone.contains([-1.0, 1.0])
    assert not cone.contains([1.0, 0.0])


def test_tangent_cone_needs_a_member():
    with pytest.raises(PointNotInSet):
        tangent_cone(Box.interval(0.0, 1.0), [2.0])


def test_cone_feasibility_examples():
    halfplane = tangent_cone(EX1_C, [1.3, 0.2])
    assert cone_feasible(Cone.whole_space(2), Box([-5.0, 0.0], [5.0, 1.0]))
    assert not cone_feasible(halfplane, Box.point([1.3]), [0.0])
    assert cone_feasible(halfplane, Box.interval(-2.0, -1.0), [0.0])


def test_sampled_projection_is_flagged():
    disc = Polyhedron([[1.0, 1.0], [-1.0, -1.0]], [1.0, 1.0])
    approx = sampled_projection(disc, Box.interval(-0.5, 0.5), Box.interval(-3.0, 3.0), resolution=13)
    assert approx.flagged
    assert approx.contains([0.0])
    assert not approx.contains([3.0])


def test_product_projection_returns_the_state_factor():
    A = Box([0.0, -1.0], [1.0, 1.0])
    assert project_x(Product(A, W), W) == A


def test_polyhedral_description_of_output_form():
    poly = to_polyhedron(EX1_C)
    assert poly.contains([1.3, 0.2])
    assert not poly.contains([1.4, 0.2])


@settings(max_examples=200, deadline=None)
@given(A=boxes(), B=boxes(max_width=1.0), seed=st.integers(0, 2**16))
def test_pontryagin_then_minkowski_stays_inside(A, B, seed):
    diff = pontryagin_diff(A, B)
    if diff.is_empty:
        return
    rng = np.random.default_rng(seed)
    for _ in range(5):
        x = rng.uniform(diff.lower, diff.upper)
        b = rng.uniform(B.lower, B.upper)
        assert A.contains(x + b, tol=1e-9)


@settings(max_examples=200, deadline=None)
@given(A=boxes(), B=boxes(dim=1))
def test_projection_of_a_product(A, B):
    assert project_x(Product(A, B), B) == A


@settings(max_examples=100, deadline=None)
@given(A=boxes(), B=boxes())
def test_minkowski_sum_contains_sums_of_centres(A, B):
    assert minkowski_sum(A, B).contains(A.center + B.center, tol=1e-9)


@settings(max_examples=200, deadline=None)
@given(box=boxes(max_width=2.0), data=st.data())
def test_tangent_cone_matches_limit_oracle(box, data):
    # snap some coordinates to faces so that active constraints occur
    point = []
    for lo, hi in zip(box.lower, box.upper):
        choice = data.draw(st.sampled_from(["lower", "upper", "inside"]))
        point.append(lo if choice == "lower" else hi if choice == "upper" else 0.5 * (lo + hi))
    point = np.array(point)
    cone = tangent_cone(box, point)
    directions = unit_directions(2, 100)
    accepted = limit_direction_oracle(box, point, directions, taus=(1e-2, 1e-3, 1e-4))
    for d, ok in zip(directions, accepted):
        if ok:
            assert cone.contains(d, tol=1e-9)


@settings(max_examples=200, deadline=None)
@given(box=boxes(), x=st.lists(st.floats(-10.0, 10.0), min_size=2, max_size=2))
def test_margin_sign_matches_membership(box, x):
    assert (set_margin(box, x) <= 0) == set_contains(box, x)
    assert (set_margin(EX1_C, [x[0], 0.1]) <= 0) == set_contains(EX1_C, [x[0], 0.1])
