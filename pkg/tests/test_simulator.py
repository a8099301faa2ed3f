import math

import numpy as np
import pytest

from src.core.errors import HorizonMismatch, StartOutsideFlowSet
from src.core.hybrid_time import ArcSegment, HybridArc, arc_is_nontrivial
from src.core.system import AffineFlow, HybridSystem, JumpMap, can_jump
from src.sets.set_expr import Box, Product
from src.signals.signal import Signal
from src.signals.signal_parser import parse_signal
from src.simulation.classification import (
    COMPLETE_EVIDENCE,
    ENDS_AT_INPUT_DISCONTINUITY,
    ENDS_WITH_FLOW,
    UNDETERMINED,
    classify_termination,
)
from src.simulation.integrator import flow_segment
from src.simulation.report import (
    GEOMETRY_NO_OVERLAP,
    INPUT_DISCONTINUITY,
    FlowExit,
    SimConfig,
    Termination,
)
from src.simulation.simulator import solve
from src.simulation.validation import FLOW_SET, JUMP_MAP, validate_arc
from src.utils.export import report_to_dict
from src.utils.formatting import canonical_json

LN6 = math.log(6.0)


def flow_first(t_max=20.0, **kwargs):
    return SimConfig(priority="FlowPriority", t_max=t_max, **kwargs)


def test_flow_segment_locates_jump_set_entry(ex1, w_plus):
    segment, exit_ = flow_segment(ex1, [-0.2], w_plus, 0.0, 0, flow_first())
    assert exit_.kind == FlowExit.ENTERED_JUMP_SET
    assert exit_.time == pytest.approx(LN6, abs=1e-6)
    assert segment.states[-1][0] == pytest.approx(-1.2, abs=1e-6)


def test_flow_segment_stops_at_input_discontinuity(remark2, remark2_signal):
    segment, exit_ = flow_segment(remark2, [1.0], remark2_signal, 0.0, 0, flow_first(), watch_jump_set=False)
    assert exit_.kind == FlowExit.SIGNAL_BREAKPOINT
    assert exit_.time == 1.0
    assert np.max(np.abs(segment.states - 1.0)) <= 1e-9


@pytest.mark.parametrize("mode", ["E", "AE"])
def test_flow_segment_refuses_start_outside_c(ex2, ex2_witness, mode):
    with pytest.raises(StartOutsideFlowSet) as info:
        flow_segment(ex2, [1.0], ex2_witness, 0.0, 0, SimConfig(mode=mode))
    assert info.value.margin == pytest.approx(0.2)


def test_flow_segment_respects_budget(ex1, w_plus):
    segment, exit_ = flow_segment(ex1, [0.0], w_plus, 0.0, 0, SimConfig(t_max=0.5))
    assert exit_.kind == FlowExit.BUDGET
    assert segment.t_end == 0.5


def test_ex1_is_periodic(ex1, w_plus, cfg):
    report = solve(ex1, [1.0], w_plus, cfg)
    assert report.termination.kind == Termination.BUDGET_EXHAUSTED
    assert report.termination.budget == "t"
    assert report.arc.max_abs_state() <= 1.7 + 1e-6
    jump_times = report.arc.jump_times
    assert jump_times[0] == 0.0
    assert np.allclose(np.diff(jump_times), LN6, atol=1e-6)
    for seg in report.arc.segments[1:]:
        assert seg.states[0][0] == pytest.approx(-0.2)
    assert classify_termination(report, ex1, w_plus) == COMPLETE_EVIDENCE


def test_dead_state_without_overlap(ex2, ex2_witness):
    report = solve(ex2, [1.0], ex2_witness, SimConfig())
    term = report.termination
    assert term.kind == Termination.DEAD_STATE
    assert (term.t, term.j) == (0.0, 0)
    assert term.cause == GEOMETRY_NO_OVERLAP
    assert not arc_is_nontrivial(report.arc)
    assert report.is_dead


def test_dead_state_at_input_discontinuity(remark2, remark2_signal):
    report = solve(remark2, [1.0], remark2_signal, flow_first())
    term = report.termination
    assert term.kind == Termination.DEAD_STATE
    assert (term.t, term.j) == (1.0, 0)
    assert term.cause == INPUT_DISCONTINUITY
    assert report.arc.domain.sup() == (1.0, 0)
    assert classify_termination(report, remark2, remark2_signal) == ENDS_AT_INPUT_DISCONTINUITY


def test_finite_escape_ends_with_flow(riccati):
    w = Signal.constant([0.0], riccati.input_set)
    report = solve(riccati, [1.0], w, SimConfig(t_max=20.0))
    assert report.termination.kind == Termination.BLOWUP
    assert report.termination.t == pytest.approx(1.0, abs=1e-3)
    assert report.arc.domain.last.right_open
    assert classify_termination(report, riccati, w) == ENDS_WITH_FLOW


def test_repeated_jumps_at_one_instant_are_flagged(remark2):
    w = Signal.constant([-1.0])
    report = solve(remark2, [1.0], w, SimConfig(priority="JumpPriority"))
    assert report.termination.kind == Termination.ZENO
    assert report.termination.t == 0.0
    assert classify_termination(report, remark2, w) == UNDETERMINED


def test_jump_budget(ex1, w_plus):
    report = solve(ex1, [1.0], w_plus, SimConfig(j_max=2, t_max=50.0))
    assert report.termination.kind == Termination.BUDGET_EXHAUSTED
    assert report.termination.budget == "j"
    assert report.termination.j == 2


def test_enumerate_both_branches(ex1, w_plus):
    cfg = SimConfig(priority="EnumerateBoth", t_max=3.0, branch_budget=6)
    reports = solve(ex1, [1.0], w_plus, cfg)
    assert isinstance(reports, list)
    assert 2 <= len(reports) <= 6
    assert reports[0].branch[0] == "flow"
    assert len({r.branch for r in reports}) == len(reports)
    for report in reports:
        assert report.arc.max_abs_state() <= 1.7 + 1e-6


def test_solutions_validate_in_their_own_mode(ex1, w_plus, remark2, remark2_signal):
    for mode in ("E", "AE"):
        report = solve(ex1, [0.5], w_plus, SimConfig(mode=mode, t_max=6.0))
        assert validate_arc(ex1, report.arc, w_plus, mode).valid
    report = solve(remark2, [1.0], remark2_signal, flow_first())
    assert validate_arc(remark2, report.arc, remark2_signal, "E").valid


def test_wrong_input_breaks_the_jump_map(ex1, w_plus, cfg):
    report = solve(ex1, [1.0], w_plus, cfg)
    result = validate_arc(ex1, report.arc, Signal.constant([0.0], ex1.input_set), "E")
    assert not result.valid
    first = result.violations[0]
    assert first.kind == JUMP_MAP
    assert (first.j, first.t) == (0, 0.0)


def test_e_solutions_are_ae_solutions(ex1):
    w = parse_signal("steps:0:0.2,1:-0.2", ex1.input_set)
    report = solve(ex1, [0.5], w, SimConfig(mode="E", t_max=8.0))
    assert validate_arc(ex1, report.arc, w, "E").valid
    assert validate_arc(ex1, report.arc, w, "AE").valid


def test_override_violation_is_ae_only(ex3):
    times = np.linspace(0.0, 1.0, 11)
    states = 0.1 * np.exp(times).reshape(-1, 1)
    arc = HybridArc.from_segments([ArcSegment(0, times, states, states)], 1)
    w = parse_signal("const:0+override:0.5=5", ex3.input_set)
    assert validate_arc(ex3, arc, w, "AE").valid
    result = validate_arc(ex3, arc, w, "E")
    assert [v.kind for v in result.violations] == [FLOW_SET]
    assert result.violations[0].t == 0.5


@pytest.mark.parametrize("t_bad", [0.123, 0.9871])
def test_e_mode_checks_overrides_off_the_sample_grid(ex3, t_bad):
    times = np.linspace(0.0, 1.0, 10)
    states = 0.1 * np.exp(times).reshape(-1, 1)
    arc = HybridArc.from_segments([ArcSegment(0, times, states, states)], 1)
    w = parse_signal(f"const:0+override:{t_bad}=5", ex3.input_set)
    result = validate_arc(ex3, arc, w, "E")
    assert [(v.kind, v.t) for v in result.violations] == [(FLOW_SET, t_bad)]
    assert validate_arc(ex3, arc, w, "AE").valid


def test_validation_rejects_arcs_past_the_horizon(ex1):
    arc = HybridArc.from_segments([ArcSegment(0, [0.0, 2.0], [[0.0], [0.0]])], 1)
    with pytest.raises(HorizonMismatch):
        validate_arc(ex1, arc, Signal.constant([0.0], horizon=1.0))


@pytest.mark.parametrize("mode", ["E", "AE"])
@pytest.mark.parametrize(
    "xi, text, t_first, x_after",
    [
        (1.0, "const:0.1+override:0=-0.1", 0.0, -0.1),
        (0.5, "steps:0:-0.1,0.5:0.2+override:0.5=-0.1", 0.5, -0.2),
    ],
)
def test_jump_priority_never_flows_inside_d(ex1, xi, text, t_first, x_after, mode):
    w = parse_signal(text, ex1.input_set)
    report = solve(ex1, [xi], w, SimConfig(mode=mode, priority="JumpPriority", t_max=5.0))
    for seg in report.arc.segments:
        for t, x in zip(seg.times, seg.states):
            if t < seg.t_end:
                assert not can_jump(ex1, x, w.evaluate(t))
    assert report.arc.jump_times[0] == pytest.approx(t_first, abs=1e-6)
    assert report.arc.segments[1].states[0][0] == pytest.approx(x_after)


def test_flow_segment_leaves_at_once_when_the_right_limit_is_in_d(ex1):
    w = parse_signal("const:0.1+override:0=-0.1", ex1.input_set)
    cfg = SimConfig()
    segment, exit_ = flow_segment(ex1, [1.0], w, 0.0, 0, cfg)
    assert exit_.kind == FlowExit.ENTERED_JUMP_SET
    assert exit_.time == pytest.approx(2.0 * cfg.event_tol)
    assert can_jump(ex1, segment.states[-1], w.evaluate(exit_.time))
    _, flow_on = flow_segment(ex1, [1.0], w, 0.0, 0, cfg, watch_jump_set=False)
    assert flow_on.kind == FlowExit.LEFT_FLOW_SET


def test_stalled_when_the_exit_depends_on_the_selection():
    # selection xdot = 1 leaves C at once, but F = [-1, 1] also allows staying
    H = HybridSystem(
        name="selection-exit",
        flow_set=Product(Box([-np.inf], [0.0]), Box.whole(1)),
        jump_set=Box.empty(2),
        flow_map=AffineFlow([[0.0]], [[0.0]], [1.0], spread=Box.interval(-2.0, 0.0)),
        jump_map=JumpMap([]),
        input_set=Box.whole(1),
        state_dim=1,
    )
    w = Signal.constant([0.0])
    report = solve(H, [0.0], w, SimConfig())
    assert report.termination.kind == Termination.STALLED
    assert (report.termination.t, report.termination.j) == (0.0, 0)
    assert not report.is_dead
    assert classify_termination(report, H, w) == UNDETERMINED


@pytest.mark.parametrize("priority", ["JumpPriority", "FlowPriority", "EnumerateBoth"])
def test_runs_are_repeatable_byte_for_byte(ex1, priority):
    w = parse_signal("steps:0:0.2,1:-0.2+override:2=0.1", ex1.input_set)
    cfg = SimConfig(priority=priority, t_max=3.0, branch_budget=6)
    first, again = solve(ex1, [1.0], w, cfg), solve(ex1, [1.0], w, cfg)
    if priority != "EnumerateBoth":
        first, again = [first], [again]
    assert len(first) == len(again)
    for a, b in zip(first, again):
        assert canonical_json(report_to_dict(a, signal=w)) == canonical_json(report_to_dict(b, signal=w))
