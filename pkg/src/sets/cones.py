"""Bouligand tangent cones of polyhedral sets and direction feasibility."""
import logging

import numpy as np
from scipy.optimize import linprog

from src.core.errors import DimensionMismatch, PointNotInSet, UnsupportedVariant
from src.sets.set_expr import Box, Intersection, OutputForm, Polyhedron, Product, as_vector

logger = logging.getLogger(__name__)

AXIS_SIGNS = ("any", "nonneg", "nonpos", "zero")


class Cone:
    """Closed convex cone: the whole space, {d | G d <= 0}, or per-axis sign constraints"""

    WHOLE_SPACE = "WholeSpace"
    POLYHEDRAL = "Polyhedral"
    AXIS_BOX = "AxisBox"

    def __init__(self, kind, dim, rows=None, signs=None):
        self.kind = kind
        self.dim = dim
        self.rows = np.zeros((0, dim)) if rows is None else np.asarray(rows, dtype=float).reshape(-1, dim)
        self.signs = tuple(signs) if signs is not None else None

    @classmethod
    def whole_space(cls, dim):
        return cls(cls.WHOLE_SPACE, dim)

    @classmethod
    def polyhedral(cls, rows, dim):
        rows = np.asarray(rows, dtype=float).reshape(-1, dim)
        if rows.shape[0] == 0:
            return cls.whole_space(dim)
        return cls(cls.POLYHEDRAL, dim, rows=rows)

    @classmethod
    def axis_box(cls, signs):
        if all(s == "any" for s in signs):
            return cls.whole_space(len(signs))
        unknown = set(signs) - set(AXIS_SIGNS)
        if unknown:
            raise ValueError(f"Unknown axis signs {unknown}")
        return cls(cls.AXIS_BOX, len(signs), signs=signs)

    def halfspaces(self):
        """Rows G with cone = {d | G d <= 0}"""
        if self.kind != self.AXIS_BOX:
            return self.rows
        rows = []
        for i, sign in enumerate(self.signs):
            e = np.zeros(self.dim)
            e[i] = 1.0
            if sign in ("nonneg", "zero"):
                rows.append(-e)
            if sign in ("nonpos", "zero"):
                rows.append(e)
        return np.array(rows).reshape(-1, self.dim)

    def contains(self, d, tol=1e-12):
        d = as_vector(d)
        if d.shape[0] != self.dim:
            raise DimensionMismatch(self.dim, d.shape[0])
        G = self.halfspaces()
        return bool(np.all(G @ d <= tol * (1.0 + np.linalg.norm(d))))

    def product(self, other):
        if self.kind == self.WHOLE_SPACE and other.kind == self.WHOLE_SPACE:
            return Cone.whole_space(self.dim + other.dim)
        if self.kind in (self.AXIS_BOX, self.WHOLE_SPACE) and other.kind in (self.AXIS_BOX, self.WHOLE_SPACE):
            left = self.signs or ("any",) * self.dim
            right = other.signs or ("any",) * other.dim
            return Cone.axis_box(left + right)
        G1, G2 = self.halfspaces(), other.halfspaces()
        rows = np.vstack([
            np.hstack([G1, np.zeros((G1.shape[0], other.dim))]),
            np.hstack([np.zeros((G2.shape[0], self.dim)), G2]),
        ])
        return Cone.polyhedral(rows, self.dim + other.dim)

    def __repr__(self):
        if self.kind == self.WHOLE_SPACE:
            return f"Cone(WholeSpace, dim={self.dim})"
        if self.kind == self.AXIS_BOX:
            return f"Cone(AxisBox {self.signs})"
        return f"Cone(Polyhedral, {self.rows.shape[0]} halfspaces, dim={self.dim})"

    def to_dict(self):
        out = {"kind": self.kind, "dim": self.dim}
        if self.kind == self.AXIS_BOX:
            out["signs"] = list(self.signs)
        elif self.kind == self.POLYHEDRAL:
            out["rows"] = self.rows.tolist()
        return out


def _active_tol(tol, scale):
    return tol * (1.0 + abs(scale))


def tangent_cone(S, xi, tol=1e-9):
    """
    Bouligand tangent cone T_S(xi) for Box, Polyhedron and affine OutputForm sets

    Args:
        S: closed set expression
        xi: point of S
        tol: distance below which a constraint counts as active

    Raises:
        PointNotInSet, UnsupportedVariant
    """
    xi = S._vector(xi)
    if not S.contains(xi, tol):
        raise PointNotInSet(f"{xi.tolist()} is not in the {S.variant}")

    if isinstance(S, Box):
        signs = []
        for x, lo, hi in zip(xi, S.lower, S.upper):
            at_lower = np.isfinite(lo) and abs(x - lo) <= _active_tol(tol, lo)
            at_upper = np.isfinite(hi) and abs(x - hi) <= _active_tol(tol, hi)
            if at_lower and at_upper:
                signs.append("zero")
            elif at_lower:
                signs.append("nonneg")
            elif at_upper:
                signs.append("nonpos")
            else:
                signs.append("any")
        return Cone.axis_box(signs)

    if isinstance(S, Polyhedron):
        norms = np.linalg.norm(S.A, axis=1)
        active = S.A @ xi - S.b >= -tol * (1.0 + norms * np.linalg.norm(xi))
        return Cone.polyhedral(S.A[active], S.ambient_dim)

    if isinstance(S, OutputForm):
        if not S.is_affine or not isinstance(S.inner, Box):
            raise UnsupportedVariant("Tangent cone of an OutputForm needs an affine map and a Box")
        inner_cone = tangent_cone(S.inner.closure(), S.output(xi), tol)
        if inner_cone.kind == Cone.WHOLE_SPACE:
            return Cone.whole_space(S.ambient_dim)
        # preimage of a polyhedral cone under the linear part is exact
        return Cone.polyhedral(inner_cone.halfspaces() @ S.linear_part(), S.ambient_dim)

    if isinstance(S, Product):
        cones = [tangent_cone(f, p, tol) for f, p in zip(S.factors, S.parts(xi))]
        cone = cones[0]
        for other in cones[1:]:
            cone = cone.product(other)
        return cone

    if isinstance(S, Intersection):
        from src.sets.calculus import to_polyhedron

        return tangent_cone(to_polyhedron(S), xi, tol)

    raise UnsupportedVariant(f"No exact tangent cone for {S.variant}")


def cone_feasible_box(K, candidates, tol=1e-12):
    """True iff the box of candidate directions meets the cone"""
    if candidates.ambient_dim != K.dim:
        raise DimensionMismatch(K.dim, candidates.ambient_dim)
    if candidates.is_empty:
        return False
    if K.kind == Cone.WHOLE_SPACE:
        return True
    lo, hi = candidates.lower, candidates.upper
    if K.kind == Cone.AXIS_BOX:
        for sign, a, b in zip(K.signs, lo, hi):
            if sign in ("nonneg", "zero") and b < -tol:
                return False
            if sign in ("nonpos", "zero") and a > tol:
                return False
        return True

    G = K.halfspaces()
    if candidates.is_point:
        return bool(np.all(G @ lo <= tol))
    if G.shape[0] == 1:
        # minimum of one linear form over a box is attained at a vertex
        g = G[0]
        lowest = np.where(g > 0, g * lo, np.where(g < 0, g * hi, 0.0))
        return float(np.sum(lowest)) <= tol
    if candidates.is_bounded and K.dim <= 8:
        for vertex in candidates.vertices():
            if np.all(G @ vertex <= tol):
                return True
    bounds = [(None if np.isinf(a) else a, None if np.isinf(b) else b) for a, b in zip(lo, hi)]
    result = linprog(np.zeros(K.dim), A_ub=G, b_ub=np.full(G.shape[0], tol), bounds=bounds, method="highs")
    logger.debug("Cone feasibility LP status %s", result.status)
    return result.status == 0


def cone_feasible(K, F_box, fixed=None, tol=1e-12):
    """
    Decide (F_box x {fixed}) meets K

    Args:
        K: Cone over R^{n_x + n_fixed}
        F_box: Box of candidate state velocities
        fixed: trailing coordinates held fixed (for example the input derivative)
    """
    if fixed is not None and np.size(fixed):
        candidates = Box.product(F_box, Box.point(fixed))
    else:
        candidates = F_box
    return cone_feasible_box(K, candidates, tol)


def unit_directions(dim, count, seed=0):
    """Deterministic unit directions: an angle grid in 2-D, seeded Gaussian draws otherwise"""
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        angles = np.linspace(0.0, 2.0 * np.pi, count, endpoint=False)
        return np.stack([np.cos(angles), np.sin(angles)], axis=1)
    rng = np.random.default_rng(seed)
    d = rng.standard_normal((count, dim))
    axes = np.vstack([np.eye(dim), -np.eye(dim)])
    d = np.vstack([axes, d])
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def limit_direction_oracle(S, xi, directions, taus=(1e-2, 1e-3, 1e-4), tol=1e-9):
    """
    Brute-force Bouligand test: accept d when dist(xi + tau d, S) / tau vanishes as tau shrinks

    Only sets whose margin is a distance outside the set (Box) give an exact oracle.
    """
    xi = S._vector(xi)
    accepted = []
    for d in directions:
        ratios = [max(S.margin(xi + tau * d), 0.0) / tau for tau in taus]
        accepted.append(min(ratios) <= tol)
    return np.array(accepted, dtype=bool)


__all__ = [
    "AXIS_SIGNS",
    "Cone",
    "tangent_cone",
    "cone_feasible",
    "cone_feasible_box",
    "unit_directions",
    "limit_direction_oracle",
]
