"""A-posteriori check that a hybrid arc is an e- or ae-solution."""
import logging
from dataclasses import dataclass, field

import numpy as np

from src.core.errors import HorizonMismatch
from src.core.system import can_jump, flow_enclosure
from src.sets.set_expr import Box

logger = logging.getLogger(__name__)

JUMP_SET = "jump_set"
JUMP_MAP = "jump_map"
FLOW_SET = "flow_set"
FLOW_MAP = "flow_map"


@dataclass(frozen=True)
class Violation:
    kind: str
    j: int
    t: float
    detail: str
    amount: float = None

    def to_dict(self):
        return {"kind": self.kind, "j": self.j, "t": self.t, "detail": self.detail, "amount": self.amount}


@dataclass
class ArcValidation:
    mode: str
    violations: list = field(default_factory=list)
    points_checked: int = 0
    jumps_checked: int = 0

    @property
    def valid(self):
        return not self.violations

    def to_dict(self):
        return {
            "valid": self.valid,
            "mode": self.mode,
            "points_checked": self.points_checked,
            "jumps_checked": self.jumps_checked,
            "violations": [v.to_dict() for v in self.violations],
        }


def _check_jump(H, arc, w, k, tol, result):
    before, after = arc.segments[k], arc.segments[k + 1]
    t = before.t_end
    x_before = before.states[-1]
    x_after = after.states[0]
    w_t = w.evaluate(t)
    result.jumps_checked += 1
    if not can_jump(H, x_before, w_t, tol):
        margin = H.jump_set.margin(H.pair(x_before, w_t))
        result.violations.append(
            Violation(JUMP_SET, k, t, f"({x_before.tolist()}, {w_t.tolist()}) is not in D", float(margin))
        )
        return
    gaps = [float(np.max(np.abs(g - x_after))) for g in H.jump_map.successors(x_before, w_t)]
    if not gaps or min(gaps) > tol:
        result.violations.append(
            Violation(JUMP_MAP, k, t, f"x+ = {x_after.tolist()} is not a jump successor", min(gaps, default=None))
        )


def _grid(segment, resolution, events=()):
    times = np.unique(segment.times)
    if segment.t_end > segment.t_start:
        times = np.union1d(times, np.linspace(segment.t_start, segment.t_end, resolution))
    inside = [t for t in events if segment.t_start < t < segment.t_end]
    if inside:
        times = np.union1d(times, inside)
    return times


def _check_flow_set(H, arc, w, mode, tol, resolution, result):
    exempt = set(w.override_times) | set(w.breakpoints)
    # the point value at an input event only binds in E mode
    events = sorted(exempt) if mode == "E" else ()
    for seg, iv in zip(arc.segments, arc.domain.intervals):
        if iv.is_point:
            continue
        for t in _grid(seg, resolution, events):
            if not iv.t_start < t < iv.t_end:
                continue
            if mode == "AE" and t in exempt:
                continue
            w_t = w.evaluate(t) if mode == "E" else w.piece_value(t)
            x = seg.evaluate(t)
            result.points_checked += 1
            margin = H.flow_margin(x, w_t)
            if margin > tol:
                result.violations.append(
                    Violation(FLOW_SET, seg.j, float(t), f"({x.tolist()}, {w_t.tolist()}) is outside C", float(margin))
                )


def _check_flow_map(H, arc, w, deriv_tol, result):
    for seg in arc.segments:
        times = np.unique(seg.times)
        for a, b in zip(times[:-1], times[1:]):
            if w.event_times(a, b):
                continue
            mid = 0.5 * (a + b)
            slope = (seg.evaluate(b) - seg.evaluate(a)) / (b - a)
            x_mid, w_mid = seg.evaluate(mid), w.piece_value(mid)
            F = flow_enclosure(H, x_mid, w_mid)
            scale = deriv_tol * (1.0 + np.abs(H.flow_map.select(x_mid, w_mid)))
            inflated = Box(F.lower - scale, F.upper + scale)
            if not inflated.contains(slope):
                result.violations.append(
                    Violation(
                        FLOW_MAP,
                        seg.j,
                        float(mid),
                        f"difference quotient {slope.tolist()} is outside F",
                        float(inflated.margin(slope)),
                    )
                )


def validate_arc(H, arc, w, mode="E", tol=1e-6, deriv_tol=1e-3, resolution=200):
    """
    Check that arc is a solution of H under w

    Jumps are checked exactly against D and G with the point value w(t).
    Flow-set membership is checked at interior points: the stored samples, a
    uniform grid and, in E mode, every override time and breakpoint. AE mode
    skips those event times.
    The flow map is checked by difference quotients against the F enclosure
    inflated by deriv_tol.

    Raises:
        HorizonMismatch: the arc runs past the horizon of w
    """
    t_final = arc.final_point.t
    if t_final > w.horizon:
        raise HorizonMismatch(f"Arc ends at t={t_final} beyond the input horizon {w.horizon}")
    result = ArcValidation(mode)
    for k in range(len(arc.segments) - 1):
        _check_jump(H, arc, w, k, tol, result)
    _check_flow_set(H, arc, w, mode, tol, resolution, result)
    _check_flow_map(H, arc, w, deriv_tol, result)
    logger.info(
        "Validated arc in %s mode: %d points, %d jumps, %d violations",
        mode,
        result.points_checked,
        result.jumps_checked,
        len(result.violations),
    )
    return result
