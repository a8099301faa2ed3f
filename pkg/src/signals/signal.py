"""Piecewise exogenous input signals.

A Signal tiles [0, horizon] with continuous pieces (constant, affine,
polynomial or tabulated) and may carry finitely many point overrides. The
pieces are right-continuous at their start, so left limits at a breakpoint
always come from the previous piece and never from overrides.
"""
import bisect
import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from src.core.errors import (
    BeyondHorizon,
    BreakpointNondifferentiable,
    NotAbsolutelyContinuous,
    PiecesDoNotTile,
    RegularityMismatch,
    SignalOutsideW,
)
from src.sets.set_expr import Box, as_vector

logger = logging.getLogger(__name__)


class Regularity(enum.IntEnum):
    """Ordered so that a larger value is a stronger regularity class"""
    MEASURABLE = 0
    CADLAG = 1
    CONTINUOUS = 2
    ABS_CONTINUOUS = 3

    @property
    def label(self):
        return {0: "Measurable", 1: "Cadlag", 2: "Continuous", 3: "AbsContinuous"}[self.value]

    @classmethod
    def parse(cls, text):
        for member in cls:
            if member.label.lower() == str(text).lower() or member.name.lower() == str(text).lower():
                return member
        raise ValueError(f"Unknown regularity class '{text}'")


class ConstantFn:
    kind = "constant"

    def __init__(self, value):
        self.value_vector = as_vector(value)

    @property
    def dim(self):
        return self.value_vector.shape[0]

    def value(self, tau):
        return self.value_vector.copy()

    def derivative(self, tau):
        return np.zeros(self.dim)

    def critical_taus(self, lo, hi):
        return []

    def trend(self):
        return np.zeros(self.dim, dtype=int)

    def to_dict(self):
        return {"kind": self.kind, "value": self.value_vector.tolist()}


class PolynomialFn:
    """Per-component polynomial in local time tau = t - origin"""
    kind = "polynomial"

    def __init__(self, coefficients):
        coefficients = [np.atleast_1d(np.asarray(c, dtype=float)) for c in coefficients]
        self.components = [Polynomial(c) for c in coefficients]

    @classmethod
    def affine(cls, offset, slope):
        offset, slope = as_vector(offset), as_vector(slope)
        fn = cls([[a, b] for a, b in zip(offset, slope)])
        fn.kind = "affine"
        return fn

    @property
    def dim(self):
        return len(self.components)

    @property
    def degree(self):
        return max(p.degree() for p in self.components)

    def value(self, tau):
        return np.array([p(tau) for p in self.components], dtype=float)

    def derivative(self, tau):
        return np.array([p.deriv()(tau) for p in self.components], dtype=float)

    def critical_taus(self, lo, hi):
        taus = []
        for p in self.components:
            if p.degree() < 2:
                continue
            for root in p.deriv().roots():
                if abs(root.imag) < 1e-12 and lo < root.real < hi:
                    taus.append(float(root.real))
        return taus

    def trend(self):
        """Sign of each component as tau -> inf; 0 for a constant component"""
        signs = []
        for p in self.components:
            p = p.trim()
            signs.append(0 if p.degree() == 0 else int(np.sign(p.coef[-1])))
        return np.array(signs, dtype=int)

    def to_dict(self):
        return {"kind": self.kind, "coefficients": [p.coef.tolist() for p in self.components]}


class TabulatedFn:
    """Monotone-cubic (PCHIP) interpolation through stored knots"""
    kind = "tabulated"

    def __init__(self, knots, values):
        self.knots = np.asarray(knots, dtype=float)
        self.values = np.asarray(values, dtype=float).reshape(len(self.knots), -1)
        self._interp = PchipInterpolator(self.knots, self.values, axis=0, extrapolate=True)
        self._deriv = self._interp.derivative()

    @property
    def dim(self):
        return self.values.shape[1]

    def value(self, tau):
        return np.asarray(self._interp(tau), dtype=float).reshape(-1)

    def derivative(self, tau):
        return np.asarray(self._deriv(tau), dtype=float).reshape(-1)

    def critical_taus(self, lo, hi):
        # PCHIP stays within the range of neighbouring knots
        return [float(k) for k in self.knots if lo < k < hi]

    def trend(self):
        # extrapolation continues the last cubic; coefficients are highest power first
        signs = []
        for coefs in self._interp.c[:, -1, :].T:
            lead = np.flatnonzero(np.abs(coefs[:-1]) > 1e-15)
            signs.append(0 if lead.size == 0 else int(np.sign(coefs[lead[0]])))
        return np.array(signs, dtype=int)

    def to_dict(self):
        return {"kind": self.kind, "knots": self.knots.tolist(), "values": self.values.tolist()}


@dataclass(frozen=True)
class Piece:
    """fn evaluated at tau = t - origin on [t_start, t_end)"""
    t_start: float
    t_end: float
    fn: object
    origin: float = None

    def __post_init__(self):
        if self.origin is None:
            object.__setattr__(self, "origin", self.t_start)

    def value(self, t):
        return self.fn.value(t - self.origin)

    def derivative(self, t):
        return self.fn.derivative(t - self.origin)

    def range_times(self):
        """Times where extreme values of the piece can occur"""
        taus = self.fn.critical_taus(self.t_start - self.origin, self.t_end - self.origin)
        times = [self.t_start] + [tau + self.origin for tau in taus]
        if math.isfinite(self.t_end):
            times.append(self.t_end)
        return times

    def exit_time(self, value_set):
        """
        First time an unbounded piece leaves value_set, None if it never does

        Only the tail is examined: the piece is assumed to be inside value_set
        at its range_times.
        """
        if math.isfinite(self.t_end):
            return None
        exits = []
        for axis, sign in enumerate(self.fn.trend()):
            bound = value_set.upper[axis] if sign > 0 else value_set.lower[axis]
            if sign == 0 or not math.isfinite(bound):
                continue

            def gap(t, axis=axis, bound=bound, sign=sign):
                return sign * (self.value(t)[axis] - bound)

            step = 1.0
            while gap(self.t_start + step) <= 0:
                step *= 2.0
            lo = self.t_start + step / 2.0 if step > 1.0 else self.t_start
            exits.append(float(brentq(gap, lo, self.t_start + step)) if gap(lo) < 0 else lo)
        return min(exits, default=None)


@dataclass(frozen=True, eq=False)
class Signal:
    """
    Finitely-piecewise input w: [0, horizon] -> W

    Build with Signal.create, which validates tiling, W-membership and the
    declared regularity tag.
    """
    pieces: tuple
    value_set: Box
    point_overrides: dict = field(default_factory=dict)
    regularity_tag: Regularity = Regularity.MEASURABLE

    @classmethod
    def create(cls, pieces, value_set=None, overrides=None, regularity=None):
        """
        Validate and build a signal

        Args:
            pieces: list of Piece in time order
            value_set: Box W (defaults to the whole space)
            overrides: mapping t -> value
            regularity: declared Regularity; defaults to the classified one

        Raises:
            PiecesDoNotTile, SignalOutsideW, RegularityMismatch
        """
        pieces = tuple(pieces)
        if not pieces:
            raise PiecesDoNotTile("A signal needs at least one piece", time=0.0)
        dim = pieces[0].fn.dim
        if value_set is None:
            value_set = Box.whole(dim)
        overrides = {float(t): as_vector(v) for t, v in (overrides or {}).items()}
        signal = cls(pieces, value_set, overrides, Regularity.MEASURABLE)
        signal._check_tiling()
        signal._check_values()
        classified = signal_classify(signal)
        if regularity is None:
            regularity = classified
        regularity = Regularity(regularity)
        if regularity > classified:
            raise RegularityMismatch(
                f"Declared {regularity.label} but the representation is only {classified.label}"
            )
        object.__setattr__(signal, "regularity_tag", regularity)
        return signal

    @classmethod
    def constant(cls, value, value_set=None, horizon=math.inf):
        return cls.create([Piece(0.0, horizon, ConstantFn(value))], value_set)

    @classmethod
    def steps(cls, times, values, value_set=None, horizon=math.inf, overrides=None):
        """Piecewise-constant signal taking values[k] on [times[k], times[k+1])"""
        bounds = list(times) + [horizon]
        pieces = [Piece(float(a), float(b), ConstantFn(v)) for a, b, v in zip(bounds[:-1], bounds[1:], values)]
        return cls.create(pieces, value_set, overrides)

    @classmethod
    def affine(cls, offset, slope, value_set=None, horizon=math.inf):
        return cls.create([Piece(0.0, horizon, PolynomialFn.affine(offset, slope))], value_set)

    @property
    def value_dim(self):
        return self.pieces[0].fn.dim

    @property
    def horizon(self):
        return self.pieces[-1].t_end

    @property
    def breakpoints(self):
        return [p.t_start for p in self.pieces[1:]]

    @property
    def override_times(self):
        return sorted(self.point_overrides)

    def event_times(self, t0, t1):
        """Breakpoints and override times strictly inside (t0, t1)"""
        times = set(self.breakpoints) | set(self.point_overrides)
        return sorted(t for t in times if t0 < t < t1)

    def _check_tiling(self):
        if self.pieces[0].t_start != 0.0:
            raise PiecesDoNotTile(f"First piece starts at {self.pieces[0].t_start}, not 0", time=self.pieces[0].t_start)
        for a, b in zip(self.pieces[:-1], self.pieces[1:]):
            if a.t_end != b.t_start:
                raise PiecesDoNotTile(f"Pieces leave a gap or overlap at {a.t_end}", time=a.t_end)
        for p in self.pieces:
            if not p.t_end > p.t_start:
                raise PiecesDoNotTile(f"Empty piece at {p.t_start}", time=p.t_start)
            if p.fn.dim != self.value_dim:
                raise PiecesDoNotTile(f"Piece at {p.t_start} has dimension {p.fn.dim}", time=p.t_start)
        for t in self.point_overrides:
            if t < 0 or t > self.horizon:
                raise PiecesDoNotTile(f"Override at {t} lies outside [0, {self.horizon}]", time=t)

    def _check_values(self):
        for p in self.pieces:
            for t in p.range_times():
                if not self.value_set.contains(p.value(t), tol=1e-12):
                    raise SignalOutsideW(f"w({t}) = {p.value(t).tolist()} is not in W", time=t)
        t_exit = self.pieces[-1].exit_time(self.value_set)
        if t_exit is not None:
            raise SignalOutsideW(f"Unbounded last piece leaves W at t={t_exit:.9g}", time=t_exit)
        for t, v in self.point_overrides.items():
            if v.shape[0] != self.value_dim or not self.value_set.contains(v, tol=1e-12):
                raise SignalOutsideW(f"Override w({t}) = {v.tolist()} is not in W", time=t)

    def piece_index(self, t):
        if t < 0 or t > self.horizon:
            raise BeyondHorizon(f"t={t} is outside [0, {self.horizon}]", time=t)
        starts = [p.t_start for p in self.pieces]
        return max(bisect.bisect_right(starts, t) - 1, 0)

    def piece_at(self, t):
        """Piece governing the right limit at t"""
        return self.pieces[self.piece_index(t)]

    def piece_value(self, t):
        """Value at t ignoring overrides (right-continuous)"""
        return self.piece_at(t).value(t)

    def evaluate(self, t):
        if t in self.point_overrides:
            if t < 0 or t > self.horizon:
                raise BeyondHorizon(f"t={t} is outside [0, {self.horizon}]", time=t)
            return self.point_overrides[t].copy()
        return self.piece_value(t)

    def limits(self, t):
        """(left limit or None, right limit) computed from the pieces only"""
        k = self.piece_index(t)
        right = self.pieces[k].value(t)
        if t == 0:
            return None, right
        if self.pieces[k].t_start == t and k > 0:
            return self.pieces[k - 1].value(t), right
        return self.pieces[k].value(t), right

    def is_continuous_at(self, t, tol=1e-12):
        left, right = self.limits(t)
        value = self.evaluate(t)
        if left is not None and not np.allclose(left, right, atol=tol, rtol=0):
            return False
        return bool(np.allclose(value, right, atol=tol, rtol=0))

    def shift(self, a):
        """Left shift S_a: w~(t) = w(t + a)"""
        if a < 0:
            raise ValueError(f"Shift amount must be nonnegative, got {a}")
        if a == 0:
            return self
        if a > self.horizon:
            raise BeyondHorizon(f"Cannot shift past the horizon {self.horizon}", time=a)
        pieces = []
        for p in self.pieces:
            if p.t_end <= a and p is not self.pieces[-1]:
                continue
            start = max(p.t_start - a, 0.0)
            end = p.t_end - a
            if end <= start:
                continue
            pieces.append(Piece(start, end, p.fn, p.origin - a))
        if not pieces:
            last = self.pieces[-1]
            pieces = [Piece(0.0, math.inf, ConstantFn(last.value(self.horizon)), 0.0)]
        overrides = {t - a: v for t, v in self.point_overrides.items() if t >= a}
        shifted = Signal(tuple(pieces), self.value_set, overrides, self.regularity_tag)
        return shifted

    def essential_bound(self, t0, t1):
        """max |w| over piece extrema and overrides on [t0, t1]"""
        best = 0.0
        for p in self.pieces:
            if p.t_end < t0 or p.t_start > t1:
                continue
            times = [t for t in p.range_times() if t0 <= t <= t1] + [max(t0, p.t_start), min(t1, p.t_end)]
            for t in times:
                if math.isfinite(t):
                    best = max(best, float(np.max(np.abs(p.value(t)))))
        for t, v in self.point_overrides.items():
            if t0 <= t <= t1:
                best = max(best, float(np.max(np.abs(v))))
        return best

    def without_overrides(self):
        return Signal(self.pieces, self.value_set, {}, self.regularity_tag)

    def with_override(self, t, value):
        overrides = dict(self.point_overrides)
        overrides[float(t)] = as_vector(value)
        return Signal.create(self.pieces, self.value_set, overrides, Regularity.MEASURABLE)

    def to_dict(self):
        return {
            "regularity": self.regularity_tag.label,
            "W": self.value_set.to_dict(),
            "pieces": [
                {"start": p.t_start, "end": p.t_end, "origin": p.origin, **p.fn.to_dict()} for p in self.pieces
            ],
            "overrides": [{"t": t, "value": v.tolist()} for t, v in sorted(self.point_overrides.items())],
        }


def signal_eval(w, t):
    """Override value if t is overridden, else the piece value"""
    return w.evaluate(t)


def signal_limits(w, t):
    return w.limits(t)


def signal_shift(w, a):
    return w.shift(a)


def signal_classify(w, tol=1e-12):
    """Strongest regularity class the representation verifiably satisfies"""
    for t, v in w.point_overrides.items():
        if not np.allclose(v, w.piece_value(t), atol=tol, rtol=0):
            return Regularity.MEASURABLE
    continuous = True
    for k in range(1, len(w.pieces)):
        t = w.pieces[k].t_start
        if not np.allclose(w.pieces[k - 1].value(t), w.pieces[k].value(t), atol=tol, rtol=0):
            continuous = False
            break
    if not continuous:
        return Regularity.CADLAG
    if w.point_overrides:
        return Regularity.CONTINUOUS
    return Regularity.ABS_CONTINUOUS


def signal_derivative(w, t, tol=1e-12):
    """
    Derivative of an absolutely continuous signal

    Raises:
        NotAbsolutelyContinuous, BreakpointNondifferentiable
    """
    classified = signal_classify(w)
    if classified < Regularity.ABS_CONTINUOUS:
        raise NotAbsolutelyContinuous(f"Signal is only {classified.label}")
    k = w.piece_index(t)
    piece = w.pieces[k]
    right = piece.derivative(t)
    if piece.t_start == t and k > 0:
        left = w.pieces[k - 1].derivative(t)
        if not np.allclose(left, right, atol=tol, rtol=0):
            raise BreakpointNondifferentiable(f"w is not differentiable at breakpoint {t}", time=t)
    return right


def derivative_breakpoints(w, tol=1e-12):
    """Breakpoints where the left and right derivatives differ"""
    kinks = []
    for k in range(1, len(w.pieces)):
        t = w.pieces[k].t_start
        if not np.allclose(w.pieces[k - 1].derivative(t), w.pieces[k].derivative(t), atol=tol, rtol=0):
            kinks.append(t)
    return kinks
