"""Hybrid time domains and hybrid arcs.

A hybrid time domain is a union of intervals [t_j, t_{j+1}] x {j}; a hybrid
arc stores, for every j, a dense-output flow segment over that interval.
Both are immutable once validated.
"""
import bisect
import logging
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from src.core.errors import (
    EmptyDomain,
    GapBetweenJumps,
    InvalidDomainError,
    NonConsecutiveJ,
    NonMonotoneTimes,
    OpenInteriorInterval,
    PointOutsideDomain,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HybridTimePoint:
    t: float
    j: int

    def __post_init__(self):
        if not self.t >= 0 or self.j < 0:
            raise InvalidDomainError(f"Hybrid time ({self.t}, {self.j}) must have t >= 0 and j >= 0")


@dataclass(frozen=True)
class TimeInterval:
    """One flow interval I^j; an unbounded end is always right-open"""
    j: int
    t_start: float
    t_end: float
    right_open: bool = False

    @property
    def is_point(self):
        return self.t_start == self.t_end and not self.right_open

    @property
    def length(self):
        return self.t_end - self.t_start

    def contains(self, t):
        if t < self.t_start:
            return False
        if self.right_open:
            return t < self.t_end
        return t <= self.t_end

    def as_tuple(self):
        return (self.j, self.t_start, self.t_end, self.right_open)


class HybridTimeDomain:
    """Validated hybrid time domain; build it with htd_validate"""

    def __init__(self, intervals):
        self._intervals = tuple(intervals)

    @property
    def intervals(self):
        return self._intervals

    @property
    def compact(self):
        return not self._intervals[-1].right_open

    @property
    def last(self):
        return self._intervals[-1]

    def __len__(self):
        return len(self._intervals)

    def __eq__(self, other):
        return isinstance(other, HybridTimeDomain) and self._intervals == other._intervals

    def __hash__(self):
        return hash(self._intervals)

    def __repr__(self):
        parts = ", ".join(
            f"[{iv.t_start}, {iv.t_end}{')' if iv.right_open else ']'}x{{{iv.j}}}" for iv in self._intervals
        )
        return f"HybridTimeDomain({parts})"

    def interval(self, j):
        if j < 0 or j >= len(self._intervals):
            raise PointOutsideDomain(f"Jump index {j} is not in the domain")
        return self._intervals[j]

    def contains(self, point):
        if point.j >= len(self._intervals):
            return False
        return self._intervals[point.j].contains(point.t)

    def sup(self):
        last = self._intervals[-1]
        return last.t_end, last.j

    def restrict(self, T, J):
        """Truncate the domain to [0, T] x {0..J}; (T, J) must belong to the domain"""
        if not self.contains(HybridTimePoint(T, J)):
            raise PointOutsideDomain(f"({T}, {J}) is not in the domain", point=(T, J))
        kept = list(self._intervals[:J])
        kept.append(TimeInterval(J, self._intervals[J].t_start, T, False))
        return htd_validate(kept)

    def to_dict(self):
        return {
            "compact": self.compact,
            "intervals": [
                {"j": iv.j, "t_start": iv.t_start, "t_end": iv.t_end, "right_open": iv.right_open}
                for iv in self._intervals
            ],
        }


def _coerce_interval(raw):
    if isinstance(raw, TimeInterval):
        return raw
    if isinstance(raw, dict):
        return TimeInterval(int(raw["j"]), float(raw["t_start"]), float(raw["t_end"]), bool(raw.get("right_open", False)))
    if len(raw) == 3:
        j, t0, t1 = raw
        return TimeInterval(int(j), float(t0), float(t1), math.isinf(float(t1)))
    j, t0, t1, open_flag = raw
    return TimeInterval(int(j), float(t0), float(t1), bool(open_flag))


def htd_validate(intervals):
    """
    Validate a raw interval list and build a hybrid time domain

    Args:
        intervals: sequence of (j, t_start, t_end[, right_open]) tuples, dicts or TimeInterval

    Returns:
        HybridTimeDomain

    Raises:
        EmptyDomain, NonConsecutiveJ, NonMonotoneTimes, GapBetweenJumps, OpenInteriorInterval
    """
    raw = list(intervals)
    if not raw:
        raise EmptyDomain("A hybrid time domain needs at least one interval")

    checked = []
    for index, entry in enumerate(raw):
        iv = _coerce_interval(entry)
        if math.isinf(iv.t_end) and not iv.right_open:
            iv = TimeInterval(iv.j, iv.t_start, iv.t_end, True)
        if iv.j != index:
            raise NonConsecutiveJ(f"Interval {index} has j={iv.j}, expected {index}", index=index)
        if not iv.t_start >= 0 or math.isinf(iv.t_start):
            raise NonMonotoneTimes(f"Interval {index} starts at invalid time {iv.t_start}", index=index)
        if iv.t_end < iv.t_start or (iv.right_open and iv.t_end == iv.t_start):
            raise NonMonotoneTimes(f"Interval {index} ends at {iv.t_end} before it starts at {iv.t_start}", index=index)
        if checked:
            previous = checked[-1]
            if previous.right_open:
                raise OpenInteriorInterval(f"Only the last interval may be right-open (interval {index - 1})", index=index - 1)
            if previous.t_end != iv.t_start:
                raise GapBetweenJumps(
                    f"t_end({index - 1})={previous.t_end} differs from t_start({index})={iv.t_start}", index=index
                )
        checked.append(iv)
    return HybridTimeDomain(checked)


def htd_sup(domain):
    """Componentwise suprema (sup_t, sup_j) of a validated domain"""
    return domain.sup()


@dataclass(frozen=True, eq=False)
class ArcSegment:
    """
    Dense-output flow record for one jump index

    Repeated sample times are allowed: they mark a signal breakpoint where the
    derivative changes and split the Hermite interpolation into runs.
    """
    j: int
    times: np.ndarray
    states: np.ndarray
    derivatives: np.ndarray = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).reshape(-1)
        states = np.asarray(self.states, dtype=float)
        if states.ndim == 1:
            states = states.reshape(len(times), -1)
        if len(times) == 0 or states.shape[0] != len(times):
            raise InvalidDomainError(f"Segment {self.j} needs one state row per sample time")
        if np.any(np.diff(times) < 0):
            raise NonMonotoneTimes(f"Segment {self.j} sample times decrease", index=self.j)
        derivatives = self.derivatives
        if derivatives is not None:
            derivatives = np.asarray(derivatives, dtype=float).reshape(states.shape)
            derivatives.setflags(write=False)
        times.setflags(write=False)
        states.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "derivatives", derivatives)

    @property
    def order(self):
        return 3 if self.derivatives is not None else 1

    @property
    def t_start(self):
        return float(self.times[0])

    @property
    def t_end(self):
        return float(self.times[-1])

    @cached_property
    def _runs(self):
        # Split at repeated sample times; each run gets its own interpolant.
        cuts = [0] + [k + 1 for k in np.flatnonzero(np.diff(self.times) == 0)] + [len(self.times)]
        runs = []
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            if hi - lo < 2:
                continue
            t = self.times[lo:hi]
            x = self.states[lo:hi]
            if self.derivatives is not None:
                runs.append((t[0], t[-1], CubicHermiteSpline(t, x, self.derivatives[lo:hi], axis=0)))
            else:
                runs.append((t[0], t[-1], _LinearRun(t, x)))
        return runs

    def evaluate(self, t):
        k = int(np.searchsorted(self.times, t, side="left"))
        if k < len(self.times) and self.times[k] == t:
            return np.array(self.states[k])
        if t < self.times[0] or t > self.times[-1]:
            raise PointOutsideDomain(f"t={t} is outside segment {self.j}", point=(t, self.j))
        starts = [run[0] for run in self._runs]
        r = max(bisect.bisect_right(starts, t) - 1, 0)
        return np.asarray(self._runs[r][2](t), dtype=float)


class _LinearRun:
    def __init__(self, t, x):
        self.t = t
        self.x = x

    def __call__(self, t):
        return np.array([np.interp(t, self.t, self.x[:, i]) for i in range(self.x.shape[1])])


class HybridArc:
    """State trajectory on a hybrid time domain, one ArcSegment per interval"""

    def __init__(self, domain, segments, state_dim):
        segments = tuple(segments)
        if len(segments) != len(domain):
            raise InvalidDomainError(f"{len(segments)} segments for {len(domain)} intervals")
        for iv, seg in zip(domain.intervals, segments):
            if seg.j != iv.j or seg.t_start != iv.t_start or seg.t_end != iv.t_end:
                raise InvalidDomainError(f"Segment {seg.j} does not cover interval {iv.as_tuple()}")
            if seg.states.shape[1] != state_dim:
                raise InvalidDomainError(f"Segment {seg.j} has state dimension {seg.states.shape[1]}, expected {state_dim}")
        self.domain = domain
        self.segments = segments
        self.state_dim = state_dim

    @classmethod
    def from_segments(cls, segments, state_dim, right_open_last=False):
        segments = list(segments)
        raw = [(seg.j, seg.t_start, seg.t_end, False) for seg in segments]
        if right_open_last:
            j, t0, t1, _ = raw[-1]
            raw[-1] = (j, t0, t1, True)
        return cls(htd_validate(raw), segments, state_dim)

    def evaluate(self, point):
        if not self.domain.contains(point):
            raise PointOutsideDomain(f"({point.t}, {point.j}) is not in the arc domain", point=(point.t, point.j))
        return self.segments[point.j].evaluate(point.t)

    @property
    def initial_state(self):
        return np.array(self.segments[0].states[0])

    @property
    def final_state(self):
        return np.array(self.segments[-1].states[-1])

    @property
    def final_point(self):
        seg = self.segments[-1]
        return HybridTimePoint(seg.t_end, seg.j)

    @property
    def jump_times(self):
        return [iv.t_end for iv in self.domain.intervals[:-1]]

    def rows(self, unique=True):
        """Yield (j, t, x) for every stored sample; duplicate breakpoint rows are skipped when unique"""
        for seg in self.segments:
            previous = None
            for t, x in zip(seg.times, seg.states):
                if unique and previous == t:
                    continue
                previous = t
                yield seg.j, float(t), np.array(x)

    def max_abs_state(self):
        return max(float(np.max(np.abs(seg.states))) for seg in self.segments)


def arc_eval(arc, point):
    """Interpolated state of the arc at a hybrid time point; exact at stored samples"""
    return arc.evaluate(point)


def arc_is_nontrivial(arc):
    """True iff the arc domain contains at least two points"""
    intervals = arc.domain.intervals if isinstance(arc, HybridArc) else arc.intervals
    return len(intervals) >= 2 or intervals[0].t_end > intervals[0].t_start
