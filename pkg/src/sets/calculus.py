"""Set calculus: projections, Minkowski and Pontryagin differences, and the
output-form set condition.

All box operations are exact interval arithmetic and keep track of open and
closed endpoints.
"""
import logging
from dataclasses import dataclass

import numpy as np

from src.core.errors import DimensionMismatch, UnsupportedVariant
from src.sets.set_expr import (
    AffineOutputMap,
    Box,
    Intersection,
    OutputForm,
    Polyhedron,
    Product,
    SetExpr,
    as_vector,
)

logger = logging.getLogger(__name__)


def _check_boxes(A, B):
    if not isinstance(A, Box) or not isinstance(B, Box):
        raise UnsupportedVariant("Box calculus needs Box operands")
    if A.ambient_dim != B.ambient_dim:
        raise DimensionMismatch(A.ambient_dim, B.ambient_dim)


def minkowski_sum(A, B):
    _check_boxes(A, B)
    if A.is_empty or B.is_empty:
        return Box.empty(A.ambient_dim)
    return Box(
        A.lower + B.lower,
        A.upper + B.upper,
        A.lower_closed & B.lower_closed,
        A.upper_closed & B.upper_closed,
    )


def minkowski_diff(A, B):
    """A - B = {a - b | a in A, b in B}"""
    _check_boxes(A, B)
    return minkowski_sum(A, B.negate())


def pontryagin_diff(A, B):
    """A (-) B = {x | x + B subset of A}; may be empty"""
    _check_boxes(A, B)
    n = A.ambient_dim
    if B.is_empty:
        return Box.whole(n)
    if A.is_empty:
        return Box.empty(n)

    with np.errstate(invalid="ignore"):
        lower = np.where(np.isneginf(A.lower), -np.inf, A.lower - B.lower)
        upper = np.where(np.isposinf(A.upper), np.inf, A.upper - B.upper)
    # an unbounded B cannot fit inside a bounded side of A
    impossible = (np.isneginf(B.lower) & np.isfinite(A.lower)) | (np.isposinf(B.upper) & np.isfinite(A.upper))
    if np.any(impossible):
        return Box.empty(n)

    # x + b must reach A's bound only if B attains its own bound
    lower_closed = A.lower_closed | ~B.lower_closed
    upper_closed = A.upper_closed | ~B.upper_closed
    return Box(lower, upper, lower_closed, upper_closed)


def to_polyhedron(S):
    """Closed polyhedral description {x | A x <= b} of S (closure for tagged boxes)"""
    if isinstance(S, Polyhedron):
        return S
    if isinstance(S, Box):
        if S.is_empty:
            n = S.ambient_dim
            return Polyhedron(np.zeros((1, n)), [-1.0])
        rows, rhs = [], []
        for i in range(S.ambient_dim):
            if np.isfinite(S.lower[i]):
                e = np.zeros(S.ambient_dim)
                e[i] = -1.0
                rows.append(e)
                rhs.append(-S.lower[i])
            if np.isfinite(S.upper[i]):
                e = np.zeros(S.ambient_dim)
                e[i] = 1.0
                rows.append(e)
                rhs.append(S.upper[i])
        return Polyhedron(np.array(rows).reshape(-1, S.ambient_dim), np.array(rhs))
    if isinstance(S, OutputForm) and S.is_affine and isinstance(S.inner, Box):
        inner = to_polyhedron(S.inner)
        L = S.linear_part()
        return Polyhedron(inner.A @ L, inner.b - inner.A @ S.h.c)
    if isinstance(S, Intersection):
        polys = [to_polyhedron(p) for p in S.parts]
        return Polyhedron(np.vstack([p.A for p in polys]), np.concatenate([p.b for p in polys]))
    if isinstance(S, Product):
        polys = [to_polyhedron(f) for f in S.factors]
        n = S.ambient_dim
        blocks = []
        for poly, offset in zip(polys, S.offsets[:-1]):
            block = np.zeros((poly.A.shape[0], n))
            block[:, offset: offset + poly.ambient_dim] = poly.A
            blocks.append(block)
        return Polyhedron(np.vstack(blocks), np.concatenate([p.b for p in polys]))
    raise UnsupportedVariant(f"No polyhedral description for {S.variant}")


def fourier_motzkin(A, b, eliminate):
    """Eliminate the given variable indices from {x | A x <= b}"""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    for k in sorted(eliminate, reverse=True):
        col = A[:, k]
        pos, neg, zero = col > 0, col < 0, col == 0
        new_rows = [A[zero]]
        new_rhs = [b[zero]]
        for p in np.flatnonzero(pos):
            for q in np.flatnonzero(neg):
                new_rows.append((A[p] * -col[q] + A[q] * col[p]).reshape(1, -1))
                new_rhs.append(np.array([b[p] * -col[q] + b[q] * col[p]]))
        A = np.delete(np.vstack(new_rows), k, axis=1)
        b = np.concatenate(new_rhs)
        A, b = _tidy_rows(A, b)
    return A, b


def _tidy_rows(A, b):
    scale = np.max(np.abs(A), axis=1) if A.shape[1] else np.zeros(A.shape[0])
    trivial = scale == 0
    infeasible = trivial & (b < 0)
    if np.any(infeasible):
        return np.zeros((1, A.shape[1])), np.array([-1.0])
    A, b, scale = A[~trivial], b[~trivial], scale[~trivial]
    if A.shape[0] == 0:
        return A, b
    A = A / scale[:, None]
    b = b / scale
    _, keep = np.unique(np.round(np.hstack([A, b[:, None]]), 12), axis=0, return_index=True)
    keep = np.sort(keep)
    return A[keep], b[keep]


def project_x(M, W, state_dim=None):
    """
    Projection Pi_x(M, W) = {x | exists w in W with (x, w) in M}

    Args:
        M: set over R^{n_x} x R^{n_w}
        W: input Box over R^{n_w}
        state_dim: n_x (defaults to M.ambient_dim - W.ambient_dim)

    Returns:
        SetExpr over R^{n_x}; a Box whenever the projection is a box

    Raises:
        UnsupportedVariant when no exact projection is known
    """
    n_w = W.ambient_dim
    n_x = M.ambient_dim - n_w if state_dim is None else state_dim
    if n_x + n_w != M.ambient_dim:
        raise DimensionMismatch(M.ambient_dim, n_x + n_w)

    if isinstance(M, Box):
        w_part = M.axes(slice(n_x, n_x + n_w))
        if w_part.intersect(W).is_empty:
            return Box.empty(n_x)
        return M.axes(slice(0, n_x))

    if isinstance(M, Product):
        split = list(M.offsets).index(n_x) if n_x in M.offsets else None
        if split is None:
            raise UnsupportedVariant("Product factors do not separate state and input")
        x_factors = M.factors[:split]
        w_factors = M.factors[split:]
        w_set = w_factors[0] if len(w_factors) == 1 else Product(*w_factors)
        if not isinstance(w_set, Box):
            raise UnsupportedVariant("Input factor of a product must be a Box")
        if w_set.intersect(W).is_empty:
            return Box.empty(n_x)
        if len(x_factors) == 1:
            return x_factors[0]
        if all(isinstance(f, Box) for f in x_factors):
            return Box.product(*x_factors)
        return Product(*x_factors)

    if isinstance(M, OutputForm) and M.input_dim == n_w and isinstance(M.inner, Box):
        shifted = minkowski_diff(M.inner, W)
        if isinstance(M.h, AffineOutputMap):
            if M.h.is_diagonal:
                return M.h.preimage_box(shifted)
            return OutputForm(M.h, shifted, input_dim=0)
        return M.h.preimage_box(shifted)

    if isinstance(M, (Polyhedron, Intersection)):
        poly = to_polyhedron(M)
        W_poly = to_polyhedron(W)
        A_w = np.hstack([np.zeros((W_poly.A.shape[0], n_x)), W_poly.A])
        A = np.vstack([poly.A, A_w])
        b = np.concatenate([poly.b, W_poly.b])
        A_x, b_x = fourier_motzkin(A, b, range(n_x, n_x + n_w))
        return Polyhedron(A_x.reshape(-1, n_x), b_x)

    raise UnsupportedVariant(f"No exact projection for {M.variant}")


class SampledProjection(SetExpr):
    """Grid approximation of a projection; always flagged as approximate"""
    variant = "SampledProjection"
    flagged = True

    def __init__(self, inner_points, outer_points, cell):
        self.inner_points = np.asarray(inner_points, dtype=float)
        self.outer_points = np.asarray(outer_points, dtype=float)
        self.cell = as_vector(cell)

    @property
    def ambient_dim(self):
        return self.cell.shape[0]

    def _near(self, points, x):
        if points.size == 0:
            return False
        return bool(np.any(np.all(np.abs(points - x) <= 0.5 * self.cell + 1e-15, axis=1)))

    def contains(self, x, tol=0.0):
        return self._near(self.outer_points, self._vector(x))

    def contains_inner(self, x):
        return self._near(self.inner_points, self._vector(x))

    def margin(self, x):
        raise UnsupportedVariant("Sampled projections have no margin")

    def to_dict(self):
        return {
            "variant": self.variant,
            "flagged": True,
            "inner_points": self.inner_points.tolist(),
            "outer_points": self.outer_points.tolist(),
        }


def sampled_projection(M, W, x_box, resolution=21):
    """Inner/outer grid approximation of Pi_x(M, W) over a bounded state box"""
    if not x_box.is_bounded or not W.is_bounded:
        raise UnsupportedVariant("Sampled projection needs bounded state and input boxes")
    xs = x_box.grid(resolution)
    ws = W.grid(resolution)
    cell = np.where(x_box.width > 0, x_box.width / max(resolution - 1, 1), 0.0)
    band = float(np.linalg.norm(cell)) + float(np.linalg.norm(W.width / max(resolution - 1, 1)))
    inner, outer = [], []
    for x in xs:
        margins = []
        for w in ws:
            p = np.concatenate([x, w])
            if M.contains(p):
                margins.append(-np.inf)
                break
            try:
                margins.append(M.margin(p))
            except UnsupportedVariant:
                margins.append(np.inf)
        best = min(margins)
        if best == -np.inf:
            inner.append(x)
            outer.append(x)
        elif best <= band:
            outer.append(x)
    logger.warning("Projection of %s approximated on a %d-point grid", M.variant, len(xs))
    return SampledProjection(
        np.array(inner).reshape(-1, x_box.ambient_dim), np.array(outer).reshape(-1, x_box.ambient_dim), cell
    )


@dataclass(frozen=True)
class SetConditionChain:
    """Intermediate boxes of range(h) & (C_y - W) & (D_y^c - W) <= int(C_y (-) W)"""
    c_minus_w: Box
    dc_minus_w: Box
    lhs: Box
    rhs: Box
    holds: bool

    def to_dict(self):
        return {
            "c_minus_w": self.c_minus_w.to_dict(),
            "dc_minus_w": self.dc_minus_w.to_dict(),
            "lhs": self.lhs.to_dict(),
            "interior_c_pontryagin_w": self.rhs.to_dict(),
            "holds": self.holds,
        }


def output_set_chain(range_h, c_y, dc_y, w):
    """
    Evaluate the output-form set condition with exact interval arithmetic

    Args:
        range_h: Box enclosing range(h)
        c_y: closed Box C_y
        dc_y: Box describing D_y^c (normally open)
        w: input Box W
    """
    c_minus_w = minkowski_diff(c_y, w)
    dc_minus_w = minkowski_diff(dc_y, w)
    lhs = range_h.intersect(c_minus_w).intersect(dc_minus_w)
    rhs = pontryagin_diff(c_y, w).interior()
    return SetConditionChain(c_minus_w, dc_minus_w, lhs, rhs, lhs.is_subset(rhs))


def output_set_condition(range_h, c_y, dc_y, w):
    return output_set_chain(range_h, c_y, dc_y, w).holds


def flow_projection(C, W):
    """C_0 = Pi_x(C, W)"""
    return project_x(C, W)


__all__ = [
    "minkowski_sum",
    "minkowski_diff",
    "pontryagin_diff",
    "to_polyhedron",
    "fourier_motzkin",
    "project_x",
    "sampled_projection",
    "SampledProjection",
    "SetConditionChain",
    "output_set_chain",
    "output_set_condition",
    "flow_projection",
]
