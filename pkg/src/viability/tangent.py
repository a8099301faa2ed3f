"""Tangent-cone sufficient conditions for viability.

Each checker verifies a for-all condition on a finite grid of points near
(xi, w(0)) and input times, so a Holds verdict is grid-verified unless it
comes from the LP variant, which is exact for polyhedral C with an affine
single-valued flow map. None of these tests is necessary: a failing grid
point only gives Inconclusive.
"""
import logging

import numpy as np
from scipy.optimize import linprog

from src.core.errors import (
    ConfigError,
    EmptyKw,
    FlowSetNotSplit,
    NotAbsolutelyContinuous,
    PointNotInSet,
    UnsupportedSignalShape,
    UnsupportedVariant,
)
from src.core.system import AffineFlow, flow_enclosure
from src.sets.calculus import to_polyhedron
from src.sets.cones import cone_feasible, cone_feasible_box, tangent_cone
from src.sets.set_expr import Box, Polyhedron, as_vector
from src.signals.signal import (
    ConstantFn,
    PolynomialFn,
    Regularity,
    derivative_breakpoints,
    signal_classify,
    signal_derivative,
)
from src.viability.verdict import Witness, holds, inconclusive

logger = logging.getLogger(__name__)

DEFAULT_U_RADIUS = 1e-2
DEFAULT_EPS = 1e-2
REFINEMENT = 0.1
GRID_RESOLUTION = 5
MEMBERSHIP_TOL = 1e-9


def _require_abs_continuous(w, name="w"):
    classified = signal_classify(w)
    if classified < Regularity.ABS_CONTINUOUS:
        raise NotAbsolutelyContinuous(f"{name} is only {classified.label}")


def _tau_grid(w, eps, tau_grid):
    """Input times in [0, eps] off the derivative breakpoints of w"""
    if tau_grid is None:
        tau_grid = np.linspace(0.0, eps, GRID_RESOLUTION)
    kinks = set(derivative_breakpoints(w))
    taus = [float(t) for t in tau_grid if 0.0 <= t <= eps and t not in kinks]
    if not taus:
        raise ConfigError(f"No usable input times in [0, {eps}]")
    return taus


def _neighbourhood(S, center, radius, resolution, keep=None):
    """
    Grid of S inside the box of half-width radius around center

    Points outside S are projected onto it and kept when the projection
    lands inside S; this puts boundary points on the grid.
    """
    points = []
    for p in Box.centered(center, radius).grid(resolution):
        if not S.contains(p, MEMBERSHIP_TOL):
            p = S.project_point(p)
            if not S.contains(p, MEMBERSHIP_TOL):
                continue
        if keep is not None and not keep(p):
            continue
        points.append(np.asarray(p, dtype=float))
    center = as_vector(center)
    if S.contains(center, MEMBERSHIP_TOL):
        points.insert(0, center)
    return points


def _first_failure(points, taus, check):
    for p in points:
        for tau in taus:
            if not check(p, tau):
                return p, tau
    return None


def _grid_verdict(method, points_for, taus, check, radius, params):
    """Run check at both neighbourhood scales; Holds on the first clean sweep"""
    failure = None
    for scale in (radius, radius * REFINEMENT):
        points = points_for(scale)
        if not points:
            logger.debug("%s: empty neighbourhood at radius %g", method, scale)
            continue
        failure = _first_failure(points, taus, check)
        if failure is None:
            return holds(
                method,
                parameters={**params, "U_radius": scale, "points": len(points), "taus": taus},
            )
        logger.debug("%s: cone check fails at %s, tau=%g (radius %g)", method, failure[0].tolist(), failure[1], scale)
    if failure is None:
        return inconclusive(method, parameters=params, details={"reason": "no grid point in C near the start"})
    p, tau = failure
    return inconclusive(
        method,
        witness=Witness(tuple(p.tolist()), tau, None, "F does not meet the tangent cone"),
        parameters={**params, "taus": taus},
    )


def _affine_rows_hold(H, poly, region, w_dots):
    """
    Exact check for polyhedral C and x' = A x + B w + c

    For every facet g . p = b of C meeting the region, the largest value of
    g_x . (A x + B w + c) + g_w . w_dot over that facet piece must be <= 0.

    Returns:
        (True, None) or (False, point of the facet where the check fails)
    """
    flow = H.flow_map
    n_x = H.state_dim
    M = np.hstack([flow.A, flow.B])
    bounds = list(zip(region.lower, region.upper))
    for g, b in zip(poly.A, poly.b):
        g_x, g_w = g[:n_x], g[n_x:]
        objective = g_x @ M
        for w_dot in w_dots:
            offset = float(g_x @ flow.c + g_w @ w_dot)
            result = linprog(
                -objective, A_ub=poly.A, b_ub=poly.b, A_eq=g.reshape(1, -1), b_eq=[b], bounds=bounds, method="highs"
            )
            if result.status == 2:
                break
            if result.status != 0:
                return False, None
            if -result.fun + offset > MEMBERSHIP_TOL:
                return False, result.x
    return True, None


def _certified_ac(H, xi, w, radius, taus):
    """LP form of the tangent test; None when the data is not polyhedral and affine"""
    if not isinstance(H.flow_map, AffineFlow) or not H.flow_map.is_single_valued:
        return None
    try:
        poly = to_polyhedron(H.flow_set)
    except UnsupportedVariant:
        return None
    center = H.pair(xi, w.evaluate(0.0))
    region = Box.centered(center, radius).intersect(
        Box.product(Box.whole(H.state_dim), H.input_set)
    )
    w_dots = [np.asarray(signal_derivative(w, tau), dtype=float) for tau in taus]
    ok, point = _affine_rows_hold(H, poly, region, w_dots)
    params = {"U_radius": radius, "taus": taus}
    if ok:
        return holds("vc_tangent_ac", certified=True, parameters=params)
    witness = None
    if point is not None:
        witness = Witness(tuple(point.tolist()), None, None, "facet point where the flow points outward")
    return inconclusive("vc_tangent_ac", witness=witness, certified=True, parameters=params)


def vc_tangent_ac(H, xi, w, U_radius=DEFAULT_U_RADIUS, eps=DEFAULT_EPS, tau_grid=None, resolution=GRID_RESOLUTION,
                  certified=True):
    """
    Tangent-cone test for absolutely continuous inputs

    Checks that F(zeta, omega) x {w'(tau)} meets T_C(zeta, omega) at every grid
    point of C near (xi, w(0)) and every grid time tau in [0, eps] where w' exists.

    Args:
        certified: use the exact LP variant when C is polyhedral and F affine

    Raises:
        NotAbsolutelyContinuous, UnsupportedVariant
    """
    xi = as_vector(xi)
    _require_abs_continuous(w)
    taus = _tau_grid(w, eps, tau_grid)
    if certified:
        verdict = _certified_ac(H, xi, w, U_radius, taus)
        if verdict is not None and not verdict.holds:
            verdict = _certified_ac(H, xi, w, U_radius * REFINEMENT, taus)
        if verdict is not None:
            return verdict

    n_x = H.state_dim
    center = H.pair(xi, w.evaluate(0.0))

    def in_w(p):
        return H.input_set.contains(p[n_x:], MEMBERSHIP_TOL)

    def check(p, tau):
        cone = tangent_cone(H.flow_set, p)
        F = flow_enclosure(H, p[:n_x], p[n_x:])
        return cone_feasible(cone, F, signal_derivative(w, tau))

    return _grid_verdict(
        "vc_tangent_ac",
        lambda r: _neighbourhood(H.flow_set, center, r, resolution, keep=in_w),
        taus,
        check,
        U_radius,
        {"eps": eps, "resolution": resolution},
    )


def _affine_pieces(w, eps):
    """(t_start, t_end, p, s) with w(tau) = p + s tau on each piece meeting [0, eps]"""
    if signal_classify(w) < Regularity.CONTINUOUS:
        raise UnsupportedSignalShape("Graph construction needs a continuous input")
    pieces = []
    for piece in w.pieces:
        if piece.t_start > eps:
            break
        fn = piece.fn
        if not isinstance(fn, ConstantFn) and not (isinstance(fn, PolynomialFn) and fn.degree <= 1):
            raise UnsupportedSignalShape(f"Piece at t={piece.t_start} is not affine in t")
        t0 = piece.t_start
        slope = np.asarray(piece.derivative(t0), dtype=float)
        offset = np.asarray(piece.value(t0), dtype=float) - slope * t0
        pieces.append((t0, min(piece.t_end, eps), offset, slope))
    return pieces


def _graph_polyhedron(poly, n_x, t0, offset, slope):
    """
    graph(K_w) for tau >= t0 in (tau, zeta) coordinates

    The piece end is left out: the graph continues into the next piece, so
    tau <= t1 is not a face of the set.
    """
    A_x, A_w = poly.A[:, :n_x], poly.A[:, n_x:]
    rows = np.hstack([(A_w @ slope).reshape(-1, 1), A_x])
    rhs = poly.b - A_w @ offset
    tau_row = np.zeros((1, n_x + 1))
    tau_row[0, 0] = -1.0
    return Polyhedron(np.vstack([rows, tau_row]), np.concatenate([rhs, [-t0]]))


def _check_kw_nonempty(poly, n_x, pieces, resolution):
    A_x, A_w = poly.A[:, :n_x], poly.A[:, n_x:]
    for t0, t1, offset, slope in pieces:
        for tau in np.linspace(t0, t1, resolution, endpoint=False):
            w_tau = offset + slope * tau
            result = linprog(
                np.zeros(n_x), A_ub=A_x, b_ub=poly.b - A_w @ w_tau, bounds=[(None, None)] * n_x, method="highs"
            )
            if result.status == 2:
                raise EmptyKw(f"K_w({tau:g}) is empty", time=float(tau))


def vc_tangent_continuous(H, xi, w, eps=DEFAULT_EPS, U_radius=DEFAULT_U_RADIUS, resolution=GRID_RESOLUTION):
    """
    Graph tangent test for continuous, piecewise affine inputs

    On each piece, graph(K_w) with K_w(tau) = {zeta | (zeta, w(tau)) in C} is
    a polyhedron in (tau, zeta); the direction set {1} x F(zeta, w(tau)) has
    to meet its tangent cone at grid points near (0, xi).

    Raises:
        UnsupportedSignalShape, EmptyKw, UnsupportedVariant
    """
    xi = as_vector(xi)
    poly = to_polyhedron(H.flow_set)
    n_x = H.state_dim
    pieces = _affine_pieces(w, eps)
    _check_kw_nonempty(poly, n_x, pieces, resolution)
    graphs = [_graph_polyhedron(poly, n_x, t0, offset, slope) for t0, _, offset, slope in pieces]
    params = {"eps": eps, "resolution": resolution, "pieces": len(pieces)}

    start = np.concatenate([[0.0], xi])
    if not graphs[0].contains(start, MEMBERSHIP_TOL):
        return inconclusive(
            "vc_tangent_continuous",
            witness=Witness(tuple(xi.tolist()), 0.0, graphs[0].margin(start), "xi is not in K_w(0)"),
            parameters=params,
        )

    def points_for(radius):
        points = []
        for graph, (t0, t1, _, _) in zip(graphs, pieces):
            for tau in np.linspace(t0, t1, resolution):
                for zeta in Box.centered(xi, radius).grid(resolution):
                    p = np.concatenate([[tau], zeta])
                    if graph.contains(p, MEMBERSHIP_TOL):
                        points.append((graph, p))
        return points

    def check(item, _):
        graph, p = item
        try:
            cone = tangent_cone(graph, p)
        except PointNotInSet:
            return True
        w_tau = w.piece_value(float(p[0]))
        F = flow_enclosure(H, p[1:], w_tau)
        return cone_feasible_box(cone, Box.product(Box.point([1.0]), F))

    failure = None
    for scale in (U_radius, U_radius * REFINEMENT):
        items = points_for(scale)
        failure = next((item for item in items if not check(item, None)), None)
        if failure is None:
            return holds("vc_tangent_continuous", parameters={**params, "U_radius": scale, "points": len(items)})
    _, p = failure
    return inconclusive(
        "vc_tangent_continuous",
        witness=Witness(tuple(p[1:].tolist()), float(p[0]), None, "{1} x F does not meet the graph tangent cone"),
        parameters=params,
    )


def vc_split(H, xi, w1, w2, U_radius=DEFAULT_U_RADIUS, eps=DEFAULT_EPS, tau_grid=None, resolution=GRID_RESOLUTION):
    """
    Tangent test for C = C1 x R^{n_w2}

    Cones live in (zeta, omega1) space; F is evaluated at the point values
    w2(tau), so w2 may be any representable signal. w1 may be None when
    the smooth part of the input is empty.

    Raises:
        FlowSetNotSplit, NotAbsolutelyContinuous
    """
    if H.split is None:
        raise FlowSetNotSplit(f"{H.name} does not declare C = C1 x R^n_w2")
    xi = as_vector(xi)
    n_x, n_w1 = H.state_dim, H.split.n_w1
    c1 = H.split.c1
    if n_w1 and w1 is None:
        raise ConfigError("w1 is required when n_w1 > 0")
    if n_w1:
        _require_abs_continuous(w1, "w1")
        taus = _tau_grid(w1, eps, tau_grid)
        center = np.concatenate([xi, w1.evaluate(0.0)])
    else:
        taus = [float(t) for t in (np.linspace(0.0, eps, resolution) if tau_grid is None else tau_grid)]
        center = xi
    # the measurable part is sampled at its own event times too
    taus = sorted(set(taus) | {t for t in w2.override_times + w2.breakpoints if 0.0 <= t <= eps})
    w1_set = H.input_set.axes(slice(0, n_w1))
    kinks = set(derivative_breakpoints(w1)) if n_w1 else set()

    def in_w1(p):
        return w1_set.contains(p[n_x:], MEMBERSHIP_TOL)

    def check(p, tau):
        cone = tangent_cone(c1, p)
        w_full = np.concatenate([p[n_x:], w2.evaluate(tau)])
        F = flow_enclosure(H, p[:n_x], w_full)
        if tau in kinks:
            return True
        fixed = signal_derivative(w1, tau) if n_w1 else None
        return cone_feasible(cone, F, fixed)

    return _grid_verdict(
        "vc_split",
        lambda r: _neighbourhood(c1, center, r, resolution, keep=in_w1),
        taus,
        check,
        U_radius,
        {"eps": eps, "resolution": resolution, "n_w1": n_w1},
    )
