"""Trajectory probes for the local viability conditions and nontrivial existence."""
import logging
from dataclasses import replace

import numpy as np

from src.core.errors import StartOutsideFlowSet, UnsupportedVariant
from src.core.system import can_jump, flow_enclosure
from src.sets.calculus import to_polyhedron
from src.sets.set_expr import as_vector
from src.simulation.integrator import flow_segment
from src.simulation.report import FlowExit, SimConfig
from src.viability.verdict import Witness, fails, holds, inconclusive

logger = logging.getLogger(__name__)

DEFAULT_EPS_GRID = (1e-1, 1e-2, 1e-3)


def _probe_config(mode, cfg):
    base = cfg if cfg is not None else SimConfig()
    return replace(base, mode=mode, priority="FlowPriority")


def forced_exit(H, xi, w, tol=1e-9):
    """
    True when every velocity in the F enclosure leaves C at (xi, w(0+))

    Only polyhedral flow sets are decided: some active row g must have
    min over F of g_x . f + g_w . wdot(0+) > tol.
    """
    xi = as_vector(xi)
    w0 = w.piece_value(0.0)
    p = H.pair(xi, w0)
    try:
        poly = to_polyhedron(H.flow_set)
    except UnsupportedVariant:
        return False
    if poly.A.shape[0] == 0:
        return False
    active = poly.A @ p - poly.b >= -tol
    if not np.any(active):
        return False
    F = flow_enclosure(H, xi, w0)
    w_dot = w.piece_at(0.0).derivative(0.0)
    n_x = H.state_dim
    for g in poly.A[active]:
        g_x, g_w = g[:n_x], g[n_x:]
        lowest = -F.support(-g_x) + float(g_w @ w_dot)
        if lowest > tol:
            return True
    return False


def vc_probe(H, xi, w, mode="E", eps_grid=DEFAULT_EPS_GRID, cfg=None, min_survival=1e-6):
    """
    Probe the trajectory-dependent viability condition from xi under w

    Runs the flow selection on [0, eps] for each eps in the grid. Holds if one
    run stays in C (in the mode's sense) up to eps, or stays in C for at
    least min_survival before leaving (a smaller eps then works).
    FailsWithWitness only when every run fails and the failure is not an
    artefact of the selection: F is single-valued, or the exit is forced by
    the geometry of C.
    """
    xi = as_vector(xi)
    cfg = _probe_config(mode, cfg)
    witness = None
    start_outside = False
    params = {"eps_grid": list(eps_grid), "mode": mode}
    for eps in sorted(eps_grid, reverse=True):
        try:
            segment, exit_ = flow_segment(H, xi, w, 0.0, 0, cfg, watch_jump_set=False, t_stop=eps)
        except StartOutsideFlowSet as exc:
            start_outside = True
            witness = witness or Witness(tuple(xi), 0.0, exc.margin, "start outside C for t -> 0+")
            continue
        if exit_.kind == FlowExit.BUDGET and segment.t_end >= min(eps, w.horizon):
            logger.debug("VC probe at %s holds with eps=%g", xi.tolist(), eps)
            return holds("vc_probe", parameters={**params, "eps": eps})
        if segment.t_end >= min_survival:
            logger.debug("VC probe at %s holds on [0, %g]", xi.tolist(), segment.t_end)
            return holds("vc_probe", parameters={**params, "eps": segment.t_end, "refined": True})
        if witness is None:
            witness = Witness(tuple(segment.states[-1].tolist()), exit_.time, exit_.margin, exit_.kind)

    if start_outside or H.flow_map.is_single_valued or forced_exit(H, xi, w, cfg.margin_tol):
        return fails("vc_probe", witness, parameters=params)
    return inconclusive("vc_probe", witness=witness, parameters=params, details={"reason": "selection-dependent exit"})


def nontrivial_existence(H, xi, w, mode="E", eps_grid=DEFAULT_EPS_GRID, cfg=None):
    """A nontrivial solution exists iff (xi, w(0)) in D or the viability condition holds"""
    xi = as_vector(xi)
    w0 = w.evaluate(0.0)
    if can_jump(H, xi, w0):
        return holds("jump", parameters={"w0": w0.tolist()})
    probe = vc_probe(H, xi, w, mode, eps_grid, cfg)
    if probe.holds:
        return replace(probe, method="flow")
    if probe.fails:
        return replace(probe, details={"jump_possible": False, "w0": w0.tolist()})
    return probe


def completeness_sweep(H, xi_grid, shift_grid, w, mode="E", cfg=None):
    """
    Grid check of the maximal-solution hypothesis: nontrivial existence at
    every sampled (xi, S_a w) with xi in C_0
    """
    failures, open_points = [], []
    checked = 0
    for a in shift_grid:
        shifted = w.shift(a)
        for xi in np.asarray(xi_grid, dtype=float).reshape(len(xi_grid), -1):
            try:
                if not H.c0.contains(xi):
                    continue
            except UnsupportedVariant:
                pass
            checked += 1
            verdict = nontrivial_existence(H, xi, shifted, mode, cfg=cfg)
            if verdict.fails:
                failures.append({"xi": xi.tolist(), "shift": a, "witness": verdict.witness.to_dict()})
            elif verdict.inconclusive:
                open_points.append({"xi": xi.tolist(), "shift": a})
    params = {"shifts": list(shift_grid), "points_checked": checked, "mode": mode}
    if failures:
        first = failures[0]
        return fails(
            "completeness_sweep",
            Witness(tuple(first["xi"]), first["shift"], None, "no nontrivial solution"),
            parameters=params,
            details={"failures": failures, "inconclusive": open_points},
        )
    if open_points:
        return inconclusive("completeness_sweep", parameters=params, details={"inconclusive": open_points})
    return holds("completeness_sweep", parameters=params)
