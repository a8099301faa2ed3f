"""Construction of e- and ae-solutions by alternating flow segments and jumps."""
import logging
from dataclasses import dataclass, replace

import numpy as np

from src.core.errors import StartOutsideFlowSet
from src.core.hybrid_time import ArcSegment, HybridArc
from src.core.system import can_jump, jump_successors
from src.sets.set_expr import as_vector
from src.simulation.integrator import flow_segment
from src.simulation.report import (
    AFTER_JUMP,
    GEOMETRY_NO_OVERLAP,
    INPUT_DISCONTINUITY,
    FlowExit,
    SolutionReport,
    Termination,
    diagnostic,
)
from src.viability.probes import vc_probe

logger = logging.getLogger(__name__)

# exits after which the current flow interval cannot be extended
_CLOSING_EXITS = (FlowExit.LEFT_FLOW_SET, FlowExit.SIGNAL_BREAKPOINT)


@dataclass(frozen=True)
class _RunState:
    """Partial solution; immutable so that branches can share prefixes"""
    segments: tuple
    current: ArcSegment
    j: int
    t: float
    x: np.ndarray
    arrived: str
    flow_closed: bool
    jump_times: tuple
    diagnostics: tuple
    branch: tuple = ()
    force_jump: bool = False

    @classmethod
    def initial(cls, xi):
        return cls((), None, 0, 0.0, as_vector(xi), "start", False, (), ())

    def log(self, entry):
        return replace(self, diagnostics=self.diagnostics + (entry,))

    def closed_segments(self):
        current = self.current
        if current is None:
            current = ArcSegment(self.j, np.array([self.t]), self.x.reshape(1, -1))
        return self.segments + (current,)

    def with_flow(self, segment, exit_):
        current = segment if self.current is None else _merge(self.current, segment)
        return replace(
            self,
            current=current,
            t=segment.t_end,
            x=np.array(segment.states[-1]),
            arrived="flow",
            flow_closed=exit_.kind in _CLOSING_EXITS,
        )

    def with_jump(self, successor):
        return replace(
            self,
            segments=self.closed_segments(),
            current=None,
            j=self.j + 1,
            x=as_vector(successor),
            arrived="jump",
            flow_closed=False,
            jump_times=self.jump_times + (self.t,),
            force_jump=False,
        )


def _merge(first, second):
    """Continue a flow segment at the same jump index"""
    derivatives = None
    if first.derivatives is not None and second.derivatives is not None:
        derivatives = np.vstack([first.derivatives, second.derivatives[1:]])
    return ArcSegment(
        first.j,
        np.concatenate([first.times, second.times[1:]]),
        np.vstack([first.states, second.states[1:]]),
        derivatives,
    )


def _finish(H, state, termination, cfg):
    right_open = termination.kind == Termination.BLOWUP
    arc = HybridArc.from_segments(state.closed_segments(), H.state_dim, right_open_last=right_open)
    logger.info(
        "Run ends %s at (t=%.9g, j=%d)%s",
        termination.kind,
        termination.t,
        termination.j,
        f" cause {termination.cause}" if termination.cause else "",
    )
    return SolutionReport(arc, termination, cfg.mode, cfg, list(state.diagnostics), state.branch)


def _zeno(state, cfg):
    if len(state.jump_times) < cfg.j_zeno:
        return False
    return state.jump_times[-1] - state.jump_times[-cfg.j_zeno] <= cfg.t_zeno


def _no_continuation(H, w, cfg, state):
    """Neither flow nor jump: confirm a dead state with the viability probe"""
    shifted = w.shift(state.t)
    probe = vc_probe(H, state.x, shifted, cfg.mode, cfg=cfg)
    if state.arrived == "jump":
        cause = AFTER_JUMP
    elif state.arrived == "flow" and not w.is_continuous_at(state.t):
        cause = INPUT_DISCONTINUITY
    else:
        cause = GEOMETRY_NO_OVERLAP
    if probe.fails:
        termination = Termination(Termination.DEAD_STATE, state.t, state.j, cause=cause)
    else:
        detail = "flow interval closed by an input event" if state.flow_closed else "integrator produced no flow"
        termination = Termination(Termination.STALLED, state.t, state.j, detail=f"{detail}; probe {probe.status}")
    state = state.log(diagnostic("probe", state.t, state.j, status=probe.status, cause=cause))
    return _finish(H, state, termination, cfg)


def _run(H, w, cfg, state, pending):
    """
    Advance one solution until it terminates

    Under EnumerateBoth, alternatives (jump instead of flow, other jump
    successors) are pushed onto `pending`.
    """
    while True:
        if state.t >= cfg.t_max:
            return _finish(H, state, Termination(Termination.BUDGET_EXHAUSTED, state.t, state.j, budget="t"), cfg)

        w_now = w.evaluate(state.t)
        jump_ok = can_jump(H, state.x, w_now)

        if jump_ok and (cfg.priority == "JumpPriority" or state.force_jump):
            state = _jump(H, w, cfg, state, w_now, pending)
            if isinstance(state, SolutionReport):
                return state
            continue

        flowed = False
        if not state.flow_closed:
            # an EnumerateBoth flow branch may cross D; its jump alternative is pushed below
            watch = cfg.priority == "JumpPriority" or cfg.priority == "EnumerateBoth" and not jump_ok
            try:
                segment, exit_ = flow_segment(H, state.x, w, state.t, state.j, cfg, watch_jump_set=watch)
            except StartOutsideFlowSet as exc:
                state = state.log(diagnostic("no_flow", state.t, state.j, margin=float(exc.margin)))
            else:
                length = segment.t_end - state.t
                if length > cfg.event_tol or exit_.kind in (FlowExit.BUDGET, FlowExit.BLOWUP) and length > 0:
                    if jump_ok and cfg.priority == "EnumerateBoth":
                        pending.append(replace(state, force_jump=True, branch=state.branch + ("jump",)))
                        state = replace(state, branch=state.branch + ("flow",))
                    state = state.with_flow(segment, exit_).log(
                        diagnostic(
                            "flow",
                            segment.t_end,
                            state.j,
                            t_start=float(segment.t_start),
                            exit=exit_.kind,
                            margin=None if exit_.margin is None else float(exit_.margin),
                            detail=exit_.detail,
                        )
                    )
                    flowed = True
                    if exit_.kind == FlowExit.BUDGET:
                        return _finish(
                            H, state, Termination(Termination.BUDGET_EXHAUSTED, state.t, state.j, budget="t"), cfg
                        )
                    if exit_.kind == FlowExit.BLOWUP:
                        return _finish(H, state, Termination(Termination.BLOWUP, state.t, state.j), cfg)
        if flowed:
            continue

        if jump_ok:
            state = _jump(H, w, cfg, state, w_now, pending)
            if isinstance(state, SolutionReport):
                return state
            continue

        return _no_continuation(H, w, cfg, state)


def _jump(H, w, cfg, state, w_now, pending):
    if state.j >= cfg.j_max:
        return _finish(H, state, Termination(Termination.BUDGET_EXHAUSTED, state.t, state.j, budget="j"), cfg)
    successors = jump_successors(H, state.x, w_now)
    if not successors:
        return _no_continuation(H, w, cfg, state)
    if cfg.priority == "EnumerateBoth":
        for k, succ in reversed(list(enumerate(successors[1:], start=1))):
            pending.append(replace(state, force_jump=False, branch=state.branch + (f"g{k}",)).with_jump(succ))
    entry = diagnostic(
        "jump", state.t, state.j, x_before=state.x.tolist(), x_after=successors[0].tolist(), w=w_now.tolist()
    )
    state = state.with_jump(successors[0]).log(entry)
    if _zeno(state, cfg):
        return _finish(H, state, Termination(Termination.ZENO, state.t, state.j), cfg)
    return state


def solve(H, xi, w, cfg):
    """
    Build a solution from xi under input w

    Jump tests always use the exact point value w(t), overrides included.
    The priority rule decides C/D overlaps: JumpPriority jumps as soon as
    (x, w(t)) is in D, FlowPriority flows while it can, and EnumerateBoth
    explores both choices up to cfg.branch_budget solutions.

    Returns:
        SolutionReport, or a list of them under EnumerateBoth
    """
    xi = as_vector(xi)
    if xi.shape[0] != H.state_dim:
        H.pair(xi, np.zeros(H.input_dim))
    logger.info("Solving %s from xi=%s in %s mode with %s", H.name, xi.tolist(), cfg.mode, cfg.priority)
    if cfg.priority != "EnumerateBoth":
        return _run(H, w, cfg, _RunState.initial(xi), [])

    pending = [_RunState.initial(xi)]
    reports = []
    while pending and len(reports) < cfg.branch_budget:
        state = pending.pop()
        reports.append(_run(H, w, cfg, state, pending))
    if pending:
        logger.warning("Branch budget %d reached with %d unexplored branches", cfg.branch_budget, len(pending))
    return reports
