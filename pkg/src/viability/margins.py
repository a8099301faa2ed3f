"""Trajectory-independent existence tests: ball margins and the output-form set condition."""
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from src.core.errors import ConfigError, NotOutputForm, UnsupportedVariant
from src.sets.calculus import output_set_chain, to_polyhedron
from src.sets.set_expr import Box, as_vector
from src.viability.verdict import Witness, fails, holds, inconclusive

logger = logging.getLogger(__name__)

DEFAULT_DELTA_GRID = (1e-1, 5e-2, 1e-2, 1e-3)
MAX_JOBS = max(1, (os.cpu_count() or 2) - 1)


@dataclass(frozen=True)
class SamplerConfig:
    """Grid and worker settings for region sweeps; random_points adds seeded uniform draws"""
    resolution: int = 21
    delta_grid: tuple = DEFAULT_DELTA_GRID
    jobs: int = 1
    seed: int = 0
    random_points: int = 0

    def __post_init__(self):
        if self.resolution < 2:
            raise ConfigError(f"resolution must be at least 2, got {self.resolution}")
        if not self.delta_grid or min(self.delta_grid) <= 0:
            raise ConfigError("delta_grid must hold positive radii")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be at least 1, got {self.jobs}")
        if self.random_points < 0:
            raise ConfigError("random_points must be nonnegative")

    def points(self, box):
        points = list(box.grid(self.resolution))
        if self.random_points and box.is_bounded:
            rng = np.random.default_rng(self.seed)
            draws = rng.uniform(box.lower, box.upper, size=(self.random_points, box.ambient_dim))
            points.extend(p for p in draws if box.contains(p))
        return points


def _ball_fits(poly, W, n_x, xi, delta):
    """B(xi, delta) x W inside {A p <= b}, row by row"""
    for g, b in zip(poly.A, poly.b):
        g_x, g_w = g[:n_x], g[n_x:]
        worst = float(g_x @ xi) + delta * float(np.linalg.norm(g_x)) + (W.support(g_w) if np.any(g_w) else 0.0)
        if worst > b:
            return False
    return True


def vc_ball_margin(H, xi, delta_grid=DEFAULT_DELTA_GRID):
    """
    Largest grid delta with B(xi, delta) x W contained in C

    Holds implies the viability condition at xi, in both senses, for every
    input with values in W.

    Raises:
        UnsupportedVariant: C has no polyhedral description
    """
    xi = as_vector(xi)
    poly = to_polyhedron(H.flow_set)
    W = H.input_set
    for delta in sorted(delta_grid, reverse=True):
        if _ball_fits(poly, W, H.state_dim, xi, delta):
            return holds("vc_ball_margin", certified=True, parameters={"delta": delta, "delta_grid": list(delta_grid)})
    margin = None
    if poly.A.shape[0]:
        margin = max(float(g[: H.state_dim] @ xi) + W.support(g[H.state_dim:]) - b for g, b in zip(poly.A, poly.b))
    return inconclusive(
        "vc_ball_margin",
        witness=Witness(tuple(xi.tolist()), None, margin, "no grid ball fits in C for all w in W"),
        parameters={"delta_grid": list(delta_grid)},
    )


def _quantified_region(H, region):
    """Xi0 intersected with Pi_x(D^c, W); a Box when both sides are boxes"""
    try:
        projection = H.no_jump_projection
    except UnsupportedVariant:
        logger.warning("Pi_x(D^c, W) of %s is not exact; sampling membership on the grid", H.name)
        return region, None
    if isinstance(projection, Box):
        return region.intersect(projection), None
    return region, projection


def existence_over_region(H, region, mode="E", sampler=None):
    """
    Ball-margin test at every grid point of Xi0 & Pi_x(D^c, W)

    Holds everywhere gives nontrivial solutions from every point of the
    region for every input with values in W. An empty region is a vacuous
    Holds.

    Args:
        region: Box Xi0
        mode: recorded only; the ball margin covers both solution concepts
        sampler: SamplerConfig for the grid, the delta radii and the worker count
    """
    sampler = sampler or SamplerConfig()
    box, membership = _quantified_region(H, region)
    params = {"mode": mode, "resolution": sampler.resolution, "seed": sampler.seed, "region": box.to_dict()}
    if box.is_empty:
        logger.info("Region does not meet Pi_x(D^c, W); existence holds vacuously")
        return holds("existence_over_region", parameters={**params, "points": 0, "vacuous": True})
    points = [p for p in sampler.points(box) if membership is None or membership.contains(p)]
    if not points:
        return holds("existence_over_region", parameters={**params, "points": 0, "vacuous": True})

    def check(p):
        return vc_ball_margin(H, p, sampler.delta_grid)

    jobs = min(sampler.jobs, MAX_JOBS)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            verdicts = list(pool.map(check, points))
    else:
        verdicts = [check(p) for p in points]

    open_points = [
        {"xi": p.tolist(), "margin": v.witness.margin if v.witness else None}
        for p, v in zip(points, verdicts)
        if not v.holds
    ]
    params["points"] = len(points)
    params["min_delta"] = min((v.parameters["delta"] for v in verdicts if v.holds), default=None)
    logger.info("Ball margin holds at %d of %d grid points", len(points) - len(open_points), len(points))
    if open_points:
        first = open_points[0]
        return inconclusive(
            "existence_over_region",
            witness=Witness(tuple(first["xi"]), None, first["margin"], "ball margin not verified"),
            parameters=params,
            details={"inconclusive": open_points},
        )
    return holds("existence_over_region", parameters=params)


def _escape_point(lhs, rhs):
    """A point of lhs outside rhs, trying the boundary of rhs first"""
    base = np.where(np.isfinite(lhs.center), lhs.center, np.clip(0.0, lhs.lower, lhs.upper))
    for i in range(lhs.ambient_dim):
        inward = (np.nextafter(lhs.lower[i], np.inf), np.nextafter(lhs.upper[i], -np.inf))
        for value in (rhs.lower[i], rhs.upper[i], lhs.lower[i], lhs.upper[i], *inward):
            if not np.isfinite(value):
                continue
            y = base.copy()
            y[i] = value
            if lhs.contains(y) and not rhs.contains(y):
                return y
    return None


def output_form_existence(H):
    """
    Set-level existence test for systems in output form

    Evaluates range(h) & (C_y - W) & (D_y^c - W) <= int(C_y (-) W). When it
    holds, the ball margin holds on C0 & Pi_x(D^c, W). When it fails and h is
    an open map, the failure is a real counterexample.

    Raises:
        NotOutputForm
    """
    data = H.output_form
    if data is None:
        raise NotOutputForm(f"{H.name} does not declare output-form sets")
    chain = output_set_chain(data.range_h, data.c_y, data.dc_y, H.input_set)
    details = {"chain": chain.to_dict(), "h_open": data.h_open}
    if chain.holds:
        return holds("output_form_existence", certified=True, details=details)
    y = _escape_point(chain.lhs, chain.rhs)
    point = tuple(y.tolist()) if y is not None else ()
    witness = Witness(point, None, None, "output in the left side but not in int(C_y (-) W)")
    logger.info("Output-form inclusion fails at y=%s", None if y is None else y.tolist())
    if data.h_open:
        return fails("output_form_existence", witness, certified=True, details=details)
    return inconclusive("output_form_existence", witness=witness, details=details)
