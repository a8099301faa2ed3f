import math

import numpy as np
import pytest

from src.core.errors import (
    EmptyDomain,
    GapBetweenJumps,
    InvalidDomainError,
    NonConsecutiveJ,
    NonMonotoneTimes,
    OpenInteriorInterval,
    PointOutsideDomain,
)
from src.core.hybrid_time import (
    ArcSegment,
    HybridArc,
    HybridTimePoint,
    arc_eval,
    arc_is_nontrivial,
    htd_sup,
    htd_validate,
)


def constant_arc(value, t_end):
    segment = ArcSegment(0, [0.0, t_end], [[value], [value]], [[0.0], [0.0]])
    return HybridArc.from_segments([segment], 1)


def test_valid_domain_is_compact():
    domain = htd_validate([(0, 0, 1), (1, 1, 2.5)])
    assert domain.compact
    assert len(domain) == 2
    assert htd_sup(domain) == (2.5, 1)


def test_gap_between_jumps_is_rejected():
    with pytest.raises(GapBetweenJumps) as info:
        htd_validate([(0, 0, 1), (1, 1.5, 2)])
    assert info.value.index == 1


def test_point_interval_after_jump():
    domain = htd_validate([(0, 0, 1), (1, 1, 1)])
    assert domain.last.is_point
    assert domain.contains(HybridTimePoint(1.0, 1))
    assert not domain.contains(HybridTimePoint(0.5, 1))


@pytest.mark.parametrize(
    "intervals, error",
    [
        ([], EmptyDomain),
        ([(0, 0, 1), (2, 1, 2)], NonConsecutiveJ),
        ([(0, 1, 0.5)], NonMonotoneTimes),
        ([(0, 0, 1, True), (1, 1, 2)], OpenInteriorInterval),
    ],
)
def test_invalid_domains(intervals, error):
    with pytest.raises(error):
        htd_validate(intervals)


def test_domain_errors_share_a_base():
    with pytest.raises(InvalidDomainError):
        htd_validate([(0, 0, 1), (1, 2, 3)])


def test_unbounded_last_interval_is_right_open():
    domain = htd_validate([(0, 0, math.inf)])
    assert not domain.compact
    assert htd_sup(domain) == (math.inf, 0)


def test_two_jumps_at_time_zero():
    assert htd_sup(htd_validate([(0, 0, 0), (1, 0, 0)])) == (0, 1)


def test_restrict_truncates():
    domain = htd_validate([(0, 0, 1), (1, 1, 2.5)])
    restricted = domain.restrict(2.0, 1)
    assert restricted.sup() == (2.0, 1)
    with pytest.raises(PointOutsideDomain):
        domain.restrict(3.0, 1)


def test_constant_arc_evaluates_inside_and_rejects_outside():
    arc = constant_arc(1.0, 1.0)
    assert arc_eval(arc, HybridTimePoint(0.5, 0)) == pytest.approx([1.0])
    with pytest.raises(PointOutsideDomain):
        arc_eval(arc, HybridTimePoint(2.0, 0))


def test_hermite_segment_reproduces_exponential():
    times = np.linspace(0.0, 1.0, 21)
    states = -0.2 * np.exp(times)
    arc = HybridArc.from_segments([ArcSegment(0, times, states.reshape(-1, 1), states.reshape(-1, 1))], 1)
    value = arc_eval(arc, HybridTimePoint(math.log(2.0), 0))
    assert value[0] == pytest.approx(-0.4, abs=1e-6)


def test_repeated_time_splits_interpolation():
    segment = ArcSegment(0, [0.0, 1.0, 1.0, 2.0], [[0.0], [1.0], [1.0], [1.0]], [[1.0], [1.0], [0.0], [0.0]])
    assert segment.evaluate(0.5)[0] == pytest.approx(0.5)
    assert segment.evaluate(1.5)[0] == pytest.approx(1.0)


def test_jump_arc_bookkeeping():
    first = ArcSegment(0, [0.0, 1.0], [[0.0], [1.0]])
    second = ArcSegment(1, [1.0, 2.0], [[-0.5], [0.5]])
    arc = HybridArc.from_segments([first, second], 1)
    assert arc.jump_times == [1.0]
    assert arc.final_point == HybridTimePoint(2.0, 1)
    assert arc_eval(arc, HybridTimePoint(1.0, 0))[0] == 1.0
    assert arc_eval(arc, HybridTimePoint(1.0, 1))[0] == -0.5
    assert arc.max_abs_state() == 1.0


def test_segment_must_cover_its_interval():
    segment = ArcSegment(0, [0.0, 1.0], [[0.0], [1.0]])
    with pytest.raises(InvalidDomainError):
        HybridArc(htd_validate([(0, 0, 2)]), [segment], 1)


@pytest.mark.parametrize(
    "intervals, expected",
    [
        ([(0, 0, 0)], False),
        ([(0, 0, 0), (1, 0, 0)], True),
        ([(0, 0, 1e-3)], True),
    ],
)
def test_nontrivial_domains(intervals, expected):
    assert arc_is_nontrivial(htd_validate(intervals)) is expected
