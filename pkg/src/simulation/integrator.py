"""Event-detecting flow integration.

A flow segment is integrated chunk by chunk between the input's event
times (piece breakpoints and override instants), so that inside a chunk the
input is one continuous piece. Every accepted RK45 step is checked against
the flow set C (and, when watched, the jump set D); a crossing is located by
bisection on the step's dense output.
"""
import logging
import math

import numpy as np
from scipy.integrate import RK45

from src.core.errors import StartOutsideFlowSet, StepUnderflow
from src.core.hybrid_time import ArcSegment
from src.core.system import flow_select
from src.sets.set_expr import as_vector
from src.simulation.report import FlowExit

logger = logging.getLogger(__name__)


class _SegmentRecorder:
    """Collects (t, x, xdot) samples; a repeated time marks a derivative break"""

    def __init__(self, H, j):
        self.H = H
        self.j = j
        self.times = []
        self.states = []
        self.derivatives = []

    def add(self, t, x, w_val, force=False):
        x = np.array(x, dtype=float)
        if self.times and self.times[-1] == t and not force:
            return
        self.times.append(float(t))
        self.states.append(x)
        self.derivatives.append(flow_select(self.H, x, w_val))

    @property
    def last_state(self):
        return self.states[-1]

    @property
    def last_time(self):
        return self.times[-1]

    def segment(self):
        return ArcSegment(self.j, np.array(self.times), np.array(self.states), np.array(self.derivatives))


def _first_crossing(predicate, lo, hi, tol):
    """Shrink [lo, hi] with predicate(lo) False and predicate(hi) True to width tol"""
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if predicate(mid):
            hi = mid
        else:
            lo = mid
    return lo, hi


def _in_jump_set(H, x, w_val):
    return H.jump_set.contains(H.pair(x, w_val))


def _integrate_chunk(H, piece, t, x, t_end, cfg, watch, recorder):
    """
    Integrate on [t, t_end] with the input given by one piece

    Returns:
        FlowExit when the chunk ends early, None when t_end is reached
    """
    def rhs(s, y):
        return H.flow_map.select(y, piece.value(s))

    solver = RK45(
        rhs,
        t,
        np.array(x, dtype=float),
        t_end,
        max_step=cfg.max_step,
        rtol=cfg.rtol,
        atol=cfg.atol,
        first_step=min(cfg.step_init, t_end - t),
    )
    while solver.status == "running":
        message = solver.step()
        if solver.status == "failed":
            raise StepUnderflow(f"Integrator failed at t={solver.t}: {message}", time=solver.t)
        t_new, x_new = solver.t, np.array(solver.y)
        if solver.t < t_end and solver.step_size is not None and solver.step_size < cfg.step_min:
            raise StepUnderflow(f"Step size {solver.step_size:.3e} below step_min at t={t_new}", time=t_new)

        if not np.all(np.isfinite(x_new)) or np.max(np.abs(x_new)) > cfg.blowup_threshold:
            if np.all(np.isfinite(x_new)):
                recorder.add(t_new, x_new, piece.value(t_new))
            logger.info("State norm passed %g at t=%.9g", cfg.blowup_threshold, recorder.last_time)
            return FlowExit(FlowExit.BLOWUP, recorder.last_time, detail="state norm above blowup threshold")

        w_new = piece.value(t_new)
        left_c = H.flow_margin(x_new, w_new) > cfg.margin_tol
        hit_d = watch and _in_jump_set(H, x_new, w_new)
        if left_c or hit_d:
            dense = solver.dense_output()
            t_old = solver.t_old
            t_c = t_d = math.inf
            if left_c:
                lo_c, t_c = _first_crossing(
                    lambda s: H.flow_margin(dense(s), piece.value(s)) > cfg.margin_tol, t_old, t_new, cfg.event_tol
                )
            if hit_d:
                _, t_d = _first_crossing(
                    lambda s: _in_jump_set(H, dense(s), piece.value(s)), t_old, t_new, cfg.event_tol
                )
            if t_d <= t_c:
                recorder.add(t_d, dense(t_d), piece.value(t_d))
                return FlowExit(FlowExit.ENTERED_JUMP_SET, t_d, H.flow_margin(dense(t_d), piece.value(t_d)))
            recorder.add(lo_c, dense(lo_c), piece.value(lo_c))
            return FlowExit(FlowExit.LEFT_FLOW_SET, lo_c, H.flow_margin(dense(t_c), piece.value(t_c)))

        recorder.add(t_new, x_new, w_new)
    return None


def _step_into_jump_set(H, w, piece, t, x, cfg, recorder):
    """
    Flow a minimal step when (x, w(t+)) is in D but the chunk starts at t

    The right limit of w puts the state in D immediately after t, so the
    first instant a jump can be taken is t + 2 event_tol.

    Returns:
        FlowExit at that instant, or None when D was only touched and the
        chunk goes on from there
    """
    t_plus = t + 2.0 * cfg.event_tol
    exit_ = _integrate_chunk(H, piece, t, x, t_plus, cfg, False, recorder)
    if exit_ is not None:
        return exit_
    x_plus, w_plus = recorder.last_state, w.evaluate(t_plus)
    if _in_jump_set(H, x_plus, w_plus):
        return FlowExit(
            FlowExit.ENTERED_JUMP_SET, t_plus, H.flow_margin(x_plus, w_plus), detail="input right limit is in D"
        )
    return None


def flow_segment(H, x0, w, t0, j, cfg, watch_jump_set=True, t_stop=None):
    """
    Integrate the flow selection from (t0, x0) until the solution has to stop flowing

    The start test uses the right limit of w at t0. Inside the segment, input
    events are handled per mode: in E mode an override value outside C ends the
    segment there; in AE mode it is ignored.

    Args:
        H: HybridSystem
        x0: initial state
        w: Signal on the absolute time axis
        t0: start time
        j: jump index of the segment
        cfg: SimConfig
        watch_jump_set: stop when D is entered
        t_stop: flow time budget end (defaults to cfg.t_max)

    Returns:
        (ArcSegment, FlowExit)

    Raises:
        StartOutsideFlowSet, StepUnderflow
    """
    x0 = as_vector(x0)
    t_budget = min(cfg.t_max if t_stop is None else t_stop, w.horizon)
    w_right = w.piece_value(t0)
    start_margin = H.flow_margin(x0, w_right)
    if start_margin > cfg.margin_tol:
        raise StartOutsideFlowSet(
            f"({x0.tolist()}, w(t0+)={w_right.tolist()}) is outside C with margin {start_margin:.3g}",
            margin=start_margin,
        )

    recorder = _SegmentRecorder(H, j)
    recorder.add(t0, x0, w_right)
    if t0 >= t_budget:
        return recorder.segment(), FlowExit(FlowExit.BUDGET, t0)

    t, x = t0, x0
    for b in w.event_times(t0, t_budget) + [t_budget]:
        piece = w.piece_at(t)
        watch = watch_jump_set
        if watch and _in_jump_set(H, x, piece.value(t)):
            if t + 2.0 * cfg.event_tol < b:
                exit_ = _step_into_jump_set(H, w, piece, t, x, cfg, recorder)
                if exit_ is not None:
                    logger.debug("Segment j=%d exits %s at t=%.12g", j, exit_.kind, exit_.time)
                    return recorder.segment(), exit_
                t, x = recorder.last_time, recorder.last_state
            else:
                # the event at b comes first and is checked there
                watch = False
        exit_ = _integrate_chunk(H, piece, t, x, b, cfg, watch, recorder)
        if exit_ is not None:
            logger.debug("Segment j=%d exits %s at t=%.12g", j, exit_.kind, exit_.time)
            return recorder.segment(), exit_

        t, x = b, recorder.last_state
        if b >= t_budget:
            return recorder.segment(), FlowExit(FlowExit.BUDGET, b)

        w_point = w.evaluate(b)
        w_right = w.piece_value(b)
        if watch_jump_set and _in_jump_set(H, x, w_point):
            return recorder.segment(), FlowExit(
                FlowExit.ENTERED_JUMP_SET, b, H.flow_margin(x, w_point), detail="jump set reached at an input event"
            )
        point_margin = H.flow_margin(x, w_point)
        if cfg.mode == "E" and point_margin > cfg.margin_tol:
            return recorder.segment(), FlowExit(
                FlowExit.SIGNAL_BREAKPOINT, b, point_margin, detail="input value at the event leaves C"
            )
        right_margin = H.flow_margin(x, w_right)
        if right_margin > cfg.margin_tol:
            return recorder.segment(), FlowExit(
                FlowExit.SIGNAL_BREAKPOINT, b, right_margin, detail="input right limit leaves C"
            )
        if b in w.point_overrides and cfg.mode == "AE" and point_margin > cfg.margin_tol:
            logger.debug("AE mode ignores the C violation at override t=%.12g", b)
        recorder.add(b, x, w_right, force=b in w.breakpoints)
    return recorder.segment(), FlowExit(FlowExit.BUDGET, t)
