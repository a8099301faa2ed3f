import numpy as np
import pytest

from src.core.errors import ConfigError, DimensionMismatch, JumpSetViolation, SelectionOutsideEnclosure
from src.core.system import (
    AffineFlow,
    FlowMap,
    HybridSystem,
    JumpMap,
    c0_contains,
    can_jump,
    check_selection,
    flow_enclosure,
    flow_select,
    jump_successors,
)
from src.scenarios.registry import build_scenario, ex2_sufficient_overlap, ex2_witness_family, scenario_names
from src.sets.set_expr import Box, Product


@pytest.mark.parametrize(
    "fixture, x, w, expected",
    [
        ("ex1", 1.2, 0.2, True),
        ("ex2", 1.0, -0.2, False),
        ("remark2", 1.0, 2.0, False),
    ],
)
def test_can_jump(request, fixture, x, w, expected):
    H = request.getfixturevalue(fixture)
    assert can_jump(H, [x], [w]) is expected


def test_jump_successors_reset_to_minus_w(ex1):
    assert jump_successors(ex1, [-1.2], [0.2])[0] == pytest.approx([-0.2])
    assert jump_successors(ex1, [1.2], [-0.2])[0] == pytest.approx([0.2])


def test_jump_successors_outside_d(ex1):
    with pytest.raises(JumpSetViolation):
        jump_successors(ex1, [0.0], [0.0])


def test_multivalued_jump_reports_every_branch(ex1):
    H = HybridSystem(
        name="two-branch",
        flow_set=ex1.flow_set,
        jump_set=ex1.jump_set,
        flow_map=ex1.flow_map,
        jump_map=JumpMap([lambda x, w: -w, lambda x, w: np.zeros(1)]),
        input_set=ex1.input_set,
        state_dim=1,
    )
    successors = jump_successors(H, [1.2], [0.1])
    assert [s[0] for s in successors] == pytest.approx([-0.1, 0.0])


def test_flow_select(ex1, remark2):
    assert flow_select(ex1, [1.0], [0.2])[0] == 1.0
    assert flow_select(remark2, [1.0], [-1.0])[0] == 0.0


def test_flow_selection_inside_enclosure():
    H = HybridSystem(
        name="spread",
        flow_set=Product(Box.whole(1), Box.whole(1)),
        jump_set=Box.empty(2),
        flow_map=AffineFlow([[0.0]], [[0.0]], spread=Box.interval(-1.0, 1.0)),
        jump_map=JumpMap([]),
        input_set=Box.whole(1),
        state_dim=1,
    )
    assert flow_select(H, [0.3], [0.0])[0] == 0.0
    assert flow_enclosure(H, [0.3], [0.0]) == Box.interval(-1.0, 1.0)


def test_selection_outside_enclosure_is_reported():
    flow = FlowMap(lambda x, w: np.array([2.0]), lambda x, w: Box.interval(-1.0, 1.0))
    H = HybridSystem(
        name="bad",
        flow_set=Product(Box.whole(1), Box.whole(1)),
        jump_set=Box.empty(2),
        flow_map=flow,
        jump_map=JumpMap([]),
        input_set=Box.whole(1),
        state_dim=1,
    )
    with pytest.raises(SelectionOutsideEnclosure):
        flow_select(H, [0.0], [0.0])
    assert len(check_selection(H, [np.array([0.0, 0.0]), np.array([1.0, 0.0])])) == 2


def test_c0_membership(ex1, ex3):
    assert c0_contains(ex1, [1.6])
    assert not c0_contains(ex1, [1.8])
    for x in (-100.0, 0.0, 7.5):
        assert c0_contains(ex3, [x])


def test_c0_of_product(split_system):
    assert c0_contains(split_system, [1.0])
    assert not c0_contains(split_system, [1.1])


def test_dimension_mismatch(ex1):
    with pytest.raises(DimensionMismatch):
        can_jump(ex1, [0.0, 1.0], [0.0])


def test_no_jump_projection(ex1):
    assert ex1.no_jump_projection == Box.interval(-1.2, 1.2, False, False)


def test_registry_names():
    assert {"ex1", "ex2c", "ex3", "remark2", "riccati", "split"} <= set(scenario_names())
    with pytest.raises(ConfigError):
        build_scenario("nope")


def test_parametric_family():
    assert ex2_witness_family(0.1) == pytest.approx((1.3, 1.15))
    assert ex2_witness_family(0.2) == pytest.approx((1.2, 1.1))
    assert ex2_sufficient_overlap(1.5, 0.2)
    assert not ex2_sufficient_overlap(1.0, 0.2)
    assert not ex2_sufficient_overlap(1.3, 0.2)


def test_invalid_parameters():
    with pytest.raises(ConfigError):
        build_scenario("ex2c", c=-1.0)
