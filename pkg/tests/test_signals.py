import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.core.errors import (
    BeyondHorizon,
    BreakpointNondifferentiable,
    ConfigError,
    NotAbsolutelyContinuous,
    PiecesDoNotTile,
    RegularityMismatch,
    SignalOutsideW,
)
from src.sets.set_expr import Box
from src.signals.signal import (
    ConstantFn,
    Piece,
    PolynomialFn,
    Regularity,
    Signal,
    TabulatedFn,
    derivative_breakpoints,
    signal_classify,
    signal_derivative,
    signal_eval,
    signal_limits,
    signal_shift,
)
from src.signals.signal_parser import parse_signal

W = Box.interval(-0.2, 0.2)


def test_override_wins_at_its_instant(ex2_witness):
    assert signal_eval(ex2_witness, 0.0)[0] == pytest.approx(-0.2)
    assert signal_eval(ex2_witness, 0.3)[0] == pytest.approx(0.2)


def test_step_signal_is_right_continuous(remark2_signal):
    assert signal_eval(remark2_signal, 1.0)[0] == 2.0
    assert signal_eval(remark2_signal, 0.999)[0] == -1.0


def test_limits(ex2_witness, remark2_signal):
    left, right = signal_limits(ex2_witness, 0.0)
    assert left is None
    assert right[0] == pytest.approx(0.2)
    left, right = signal_limits(remark2_signal, 1.0)
    assert (left[0], right[0]) == (-1.0, 2.0)


def test_continuous_signal_limits_agree():
    w = Signal.create([Piece(0.0, 10.0, TabulatedFn(np.linspace(0, 10, 201), np.sin(np.linspace(0, 10, 201))))])
    left, right = signal_limits(w, math.pi)
    assert left == pytest.approx(right)
    assert right[0] == pytest.approx(0.0, abs=1e-3)


def test_shift_identity_and_past_breakpoint(remark2_signal):
    assert signal_shift(remark2_signal, 0.0) is remark2_signal
    shifted = signal_shift(remark2_signal, 1.0)
    for t in (0.0, 0.5, 7.0):
        assert shifted.evaluate(t)[0] == 2.0
    assert shifted.breakpoints == []


def test_shift_drops_passed_overrides(ex2_witness):
    shifted = ex2_witness.shift(0.1)
    assert shifted.point_overrides == {}
    assert shifted.evaluate(0.0)[0] == pytest.approx(0.2)


@settings(max_examples=50, deadline=None)
@given(
    a=st.floats(min_value=0.0, max_value=3.0),
    b=st.floats(min_value=0.0, max_value=3.0),
    t=st.floats(min_value=0.0, max_value=5.0),
)
def test_shift_semigroup(a, b, t):
    w = Signal.steps([0.0, 1.0, 2.5], [0.1, -0.2, 0.05], W, overrides={4.0: [0.2]})
    lhs = w.shift(b).shift(a).evaluate(t)
    rhs = w.shift(a + b).evaluate(t)
    assert np.allclose(lhs, rhs, atol=1e-12)


@pytest.mark.parametrize(
    "text, expected",
    [
        ("ex2-witness", Regularity.MEASURABLE),
        ("remark2", Regularity.CADLAG),
        ("const:0.2", Regularity.ABS_CONTINUOUS),
        ("const:0.2+override:1=0.2", Regularity.CONTINUOUS),
    ],
)
def test_classification(text, expected):
    assert signal_classify(parse_signal(text)) == expected


def test_declared_regularity_must_be_supported():
    pieces = [Piece(0.0, 1.0, ConstantFn([0.0])), Piece(1.0, math.inf, ConstantFn([0.1]))]
    with pytest.raises(RegularityMismatch):
        Signal.create(pieces, W, regularity=Regularity.CONTINUOUS)


def test_values_must_stay_in_w():
    with pytest.raises(SignalOutsideW) as info:
        Signal.steps([0.0, 2.0], [0.1, 0.5], W)
    assert info.value.time == 2.0
    with pytest.raises(SignalOutsideW):
        parse_signal("const:0.1+override:0.5=0.3", W)


def test_affine_piece_leaving_w_is_caught():
    with pytest.raises(SignalOutsideW):
        Signal.affine(0.0, 0.1, W, horizon=3.0)


@pytest.mark.parametrize(
    "build, exit_time",
    [
        (lambda: parse_signal("affine:0,0.1", W), 2.0),
        (lambda: Signal.affine(0.0, 0.1, W), 2.0),
        (lambda: Signal.affine(0.1, -0.01, W), 30.0),
        (lambda: Signal.create([Piece(0.0, math.inf, PolynomialFn([[0.0, 0.0, 1e-3]]))], W), math.sqrt(200.0)),
    ],
)
def test_unbounded_piece_leaving_w_is_caught(build, exit_time):
    with pytest.raises(SignalOutsideW) as info:
        build()
    assert info.value.time == pytest.approx(exit_time, rel=1e-6)


def test_unbounded_piece_may_drift_along_an_unbounded_axis():
    W2 = Box([-0.2, -math.inf], [0.2, math.inf])
    w = Signal.create([Piece(0.0, math.inf, PolynomialFn([[0.1], [0.0, 1.0]]))], W2)
    assert w.evaluate(1e6)[1] == pytest.approx(1e6)
    assert Signal.affine(0.1, 0.0, W).evaluate(1e6)[0] == pytest.approx(0.1)


def test_pieces_must_tile():
    with pytest.raises(PiecesDoNotTile):
        Signal.create([Piece(0.0, 1.0, ConstantFn([0.0])), Piece(1.5, 2.0, ConstantFn([0.0]))])
    with pytest.raises(PiecesDoNotTile):
        Signal.create([Piece(0.5, 2.0, ConstantFn([0.0]))])


def test_evaluation_beyond_horizon():
    w = Signal.constant([0.0], horizon=2.0)
    with pytest.raises(BeyondHorizon):
        w.evaluate(3.0)


def test_derivatives():
    assert signal_derivative(Signal.constant([0.2]), 3.0)[0] == 0.0
    ramp = Signal.affine(0.0, 0.1, horizon=2.0)
    assert signal_derivative(ramp, 1.0)[0] == pytest.approx(0.1)


def test_derivative_needs_absolute_continuity(ex2_witness):
    with pytest.raises(NotAbsolutelyContinuous):
        signal_derivative(ex2_witness, 0.5)


def test_kink_is_not_differentiable():
    pieces = [
        Piece(0.0, 1.0, PolynomialFn.affine(0.0, 0.1)),
        Piece(1.0, math.inf, PolynomialFn.affine(0.1, 0.0), origin=1.0),
    ]
    w = Signal.create(pieces)
    assert w.regularity_tag == Regularity.ABS_CONTINUOUS
    assert derivative_breakpoints(w) == [1.0]
    with pytest.raises(BreakpointNondifferentiable):
        signal_derivative(w, 1.0)


def test_essential_bound_covers_overrides(ex2_witness):
    assert ex2_witness.essential_bound(0.0, 1.0) == pytest.approx(0.2)
    w = Signal.affine(-0.1, 0.05, W, horizon=4.0)
    assert w.essential_bound(0.0, 4.0) == pytest.approx(0.1)


@pytest.mark.parametrize("text", ["steps:1:0.1", "affine:1", "pulse:1", "override:0=1"])
def test_parser_rejects_malformed_text(text):
    with pytest.raises(ConfigError):
        parse_signal(text)


def test_parser_steps_with_override():
    w = parse_signal("steps:0:0.1,2:-0.1+override:1=0.2", W)
    assert w.breakpoints == [2.0]
    assert w.evaluate(1.0)[0] == pytest.approx(0.2)
    assert w.evaluate(3.0)[0] == pytest.approx(-0.1)
