"""Structured set descriptions for flow sets, jump sets and input sets.

Every set lives in an ambient space of fixed dimension. Closed variants
expose a margin function that is <= 0 exactly on the set; open sets (jump-set
complements, interiors) are tagged boxes or complements and are tested with
strict inequalities.
"""
import logging
from abc import ABC, abstractmethod

import numpy as np

from src.core.errors import DimensionMismatch, UnsupportedVariant

logger = logging.getLogger(__name__)


def as_vector(x):
    return np.atleast_1d(np.asarray(x, dtype=float)).reshape(-1)


class SetExpr(ABC):
    variant = "SetExpr"

    @property
    @abstractmethod
    def ambient_dim(self):
        ...

    @property
    def is_closed(self):
        return True

    @property
    def is_open(self):
        return False

    @abstractmethod
    def contains(self, x, tol=0.0):
        ...

    @abstractmethod
    def margin(self, x):
        ...

    @abstractmethod
    def to_dict(self):
        ...

    def project_point(self, x):
        """Nearby point of the set, or None when the variant has no projection"""
        return None

    def _vector(self, x):
        v = as_vector(x)
        if v.shape[0] != self.ambient_dim:
            raise DimensionMismatch(self.ambient_dim, v.shape[0])
        return v

    def __contains__(self, x):
        return self.contains(x)


class Box(SetExpr):
    """Per-axis intervals; each finite endpoint is tagged closed or open"""
    variant = "Box"

    def __init__(self, lower, upper, lower_closed=True, upper_closed=True):
        lower = as_vector(lower)
        upper = as_vector(upper)
        lower, upper = np.broadcast_arrays(lower, upper)
        self.lower = np.array(lower, dtype=float)
        self.upper = np.array(upper, dtype=float)
        self.lower_closed = np.broadcast_to(np.asarray(lower_closed, dtype=bool), self.lower.shape).copy()
        self.upper_closed = np.broadcast_to(np.asarray(upper_closed, dtype=bool), self.upper.shape).copy()
        # infinite ends are never attained
        self.lower_closed &= np.isfinite(self.lower)
        self.upper_closed &= np.isfinite(self.upper)
        for arr in (self.lower, self.upper, self.lower_closed, self.upper_closed):
            arr.setflags(write=False)

    @classmethod
    def interval(cls, lo, hi, lower_closed=True, upper_closed=True):
        return cls([lo], [hi], lower_closed, upper_closed)

    @classmethod
    def point(cls, value):
        v = as_vector(value)
        return cls(v, v)

    @classmethod
    def whole(cls, dim):
        return cls(np.full(dim, -np.inf), np.full(dim, np.inf))

    @classmethod
    def empty(cls, dim):
        return cls(np.full(dim, np.inf), np.full(dim, -np.inf))

    @classmethod
    def centered(cls, center, radius):
        c = as_vector(center)
        return cls(c - radius, c + radius)

    @classmethod
    def product(cls, *boxes):
        return cls(
            np.concatenate([b.lower for b in boxes]),
            np.concatenate([b.upper for b in boxes]),
            np.concatenate([b.lower_closed for b in boxes]),
            np.concatenate([b.upper_closed for b in boxes]),
        )

    @property
    def ambient_dim(self):
        return self.lower.shape[0]

    @property
    def is_empty(self):
        if np.any(self.lower > self.upper):
            return True
        degenerate = self.lower == self.upper
        return bool(np.any(degenerate & ~(self.lower_closed & self.upper_closed)))

    @property
    def is_closed(self):
        finite_l = np.isfinite(self.lower)
        finite_u = np.isfinite(self.upper)
        return bool(np.all(self.lower_closed | ~finite_l) and np.all(self.upper_closed | ~finite_u))

    @property
    def is_open(self):
        return not np.any(self.lower_closed) and not np.any(self.upper_closed)

    @property
    def is_bounded(self):
        return bool(np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper)))

    @property
    def is_point(self):
        return bool(np.all(self.lower == self.upper)) and not self.is_empty

    @property
    def center(self):
        return 0.5 * (self.lower + self.upper)

    @property
    def width(self):
        return self.upper - self.lower

    def contains(self, x, tol=0.0):
        x = self._vector(x)
        if self.is_empty:
            return False
        lo = np.where(self.lower_closed, x >= self.lower - tol, x > self.lower - tol)
        hi = np.where(self.upper_closed, x <= self.upper + tol, x < self.upper + tol)
        return bool(np.all(lo & hi))

    def margin(self, x):
        """Signed Euclidean distance to the boundary of the closure"""
        x = self._vector(x)
        if self.is_empty:
            return np.inf
        below = self.lower - x
        above = x - self.upper
        outside = np.maximum(np.maximum(below, above), 0.0)
        if np.any(outside > 0):
            return float(np.linalg.norm(outside))
        if self.ambient_dim == 0:
            return -np.inf
        return float(np.max(np.maximum(below, above)))

    def closure(self):
        return Box(self.lower, self.upper)

    def interior(self):
        return Box(self.lower, self.upper, False, False)

    def negate(self):
        return Box(-self.upper, -self.lower, self.upper_closed, self.lower_closed)

    def axes(self, index):
        """Sub-box on the given axes (slice or index list)"""
        return Box(self.lower[index], self.upper[index], self.lower_closed[index], self.upper_closed[index])

    def intersect(self, other):
        if self.ambient_dim != other.ambient_dim:
            raise DimensionMismatch(self.ambient_dim, other.ambient_dim)
        lower = np.maximum(self.lower, other.lower)
        upper = np.minimum(self.upper, other.upper)
        lower_closed = np.where(
            self.lower == other.lower,
            self.lower_closed & other.lower_closed,
            np.where(self.lower > other.lower, self.lower_closed, other.lower_closed),
        )
        upper_closed = np.where(
            self.upper == other.upper,
            self.upper_closed & other.upper_closed,
            np.where(self.upper < other.upper, self.upper_closed, other.upper_closed),
        )
        return Box(lower, upper, lower_closed, upper_closed)

    def is_subset(self, other):
        """Exact inclusion test honouring open and closed endpoints"""
        if self.is_empty:
            return True
        if other.is_empty:
            return False
        lower_ok = (self.lower > other.lower) | (
            (self.lower == other.lower) & (other.lower_closed | ~self.lower_closed)
        )
        upper_ok = (self.upper < other.upper) | (
            (self.upper == other.upper) & (other.upper_closed | ~self.upper_closed)
        )
        return bool(np.all(lower_ok) and np.all(upper_ok))

    def vertices(self):
        if not self.is_bounded:
            raise UnsupportedVariant("Vertices of an unbounded box")
        grids = np.meshgrid(*[np.unique([lo, hi]) for lo, hi in zip(self.lower, self.upper)], indexing="ij")
        return np.stack([g.reshape(-1) for g in grids], axis=1)

    def support(self, g):
        """max over the closure of g . x"""
        g = as_vector(g)
        terms = np.where(g > 0, g * self.upper, np.where(g < 0, g * self.lower, 0.0))
        return float(np.sum(terms))

    def project_point(self, x):
        return np.clip(self._vector(x), self.lower, self.upper)

    def grid(self, resolution):
        """Tensor grid with `resolution` points per axis, restricted to the box"""
        axes = [np.linspace(lo, hi, resolution) if hi > lo else np.array([lo]) for lo, hi in zip(self.lower, self.upper)]
        mesh = np.meshgrid(*axes, indexing="ij")
        points = np.stack([m.reshape(-1) for m in mesh], axis=1)
        return np.array([p for p in points if self.contains(p)]).reshape(-1, self.ambient_dim)

    def __eq__(self, other):
        if not isinstance(other, Box) or other.ambient_dim != self.ambient_dim:
            return False
        if self.is_empty and other.is_empty:
            return True
        return (
            np.array_equal(self.lower, other.lower)
            and np.array_equal(self.upper, other.upper)
            and np.array_equal(self.lower_closed, other.lower_closed)
            and np.array_equal(self.upper_closed, other.upper_closed)
        )

    __hash__ = None

    def __repr__(self):
        if self.is_empty:
            return f"Box(empty, dim={self.ambient_dim})"
        parts = []
        for lo, hi, lc, uc in zip(self.lower, self.upper, self.lower_closed, self.upper_closed):
            parts.append(f"{'[' if lc else '('}{lo:g}, {hi:g}{']' if uc else ')'}")
        return "Box(" + " x ".join(parts) + ")"

    def to_dict(self):
        return {
            "variant": self.variant,
            "lower": self.lower.tolist(),
            "upper": self.upper.tolist(),
            "lower_closed": self.lower_closed.tolist(),
            "upper_closed": self.upper_closed.tolist(),
        }


class Polyhedron(SetExpr):
    """Closed polyhedron {x | A x <= b}"""
    variant = "Polyhedron"

    def __init__(self, A, b):
        A = np.asarray(A, dtype=float)
        b = as_vector(b) if np.size(b) else np.zeros(0)
        if A.ndim == 1:
            A = A.reshape(1, -1)
        if A.shape[0] != b.shape[0]:
            raise DimensionMismatch(A.shape[0], b.shape[0])
        self.A = A
        self.b = b

    @property
    def ambient_dim(self):
        return self.A.shape[1]

    def contains(self, x, tol=0.0):
        x = self._vector(x)
        if self.A.shape[0] == 0:
            return True
        return bool(np.all(self.A @ x <= self.b + tol))

    def margin(self, x):
        """Largest halfspace violation max_i (a_i . x - b_i)"""
        x = self._vector(x)
        if self.A.shape[0] == 0:
            return -np.inf
        return float(np.max(self.A @ x - self.b))

    def project_point(self, x, iterations=200):
        p = self._vector(x).copy()
        for _ in range(iterations):
            violation = self.A @ p - self.b
            k = int(np.argmax(violation)) if len(violation) else 0
            if len(violation) == 0 or violation[k] <= 1e-13:
                return p
            a = self.A[k]
            p = p - violation[k] * a / float(a @ a)
        return p if self.contains(p, tol=1e-9) else None

    def to_dict(self):
        return {"variant": self.variant, "A": self.A.tolist(), "b": self.b.tolist()}

    def __repr__(self):
        return f"Polyhedron({self.A.shape[0]} halfspaces in R^{self.ambient_dim})"


class AffineOutputMap:
    """y = H x + c"""
    kind = "affine"

    def __init__(self, H, c=None):
        H = np.asarray(H, dtype=float)
        if H.ndim == 0:
            H = H.reshape(1, 1)
        elif H.ndim == 1:
            H = H.reshape(1, -1)
        self.H = H
        self.c = np.zeros(H.shape[0]) if c is None else as_vector(c)

    @classmethod
    def identity(cls, dim):
        return cls(np.eye(dim))

    @property
    def input_dim(self):
        return self.H.shape[1]

    @property
    def output_dim(self):
        return self.H.shape[0]

    @property
    def is_open(self):
        return int(np.linalg.matrix_rank(self.H)) == self.output_dim

    @property
    def is_diagonal(self):
        H = self.H
        return H.shape[0] == H.shape[1] and np.all(H == np.diag(np.diag(H))) and np.all(np.diag(H) != 0)

    def __call__(self, x):
        return self.H @ as_vector(x) + self.c

    def preimage_box(self, box):
        """Exact preimage of a box under a diagonal nonsingular map"""
        if not self.is_diagonal:
            raise UnsupportedVariant("Preimage box needs a diagonal output map")
        d = np.diag(self.H)
        lo = (box.lower - self.c) / d
        hi = (box.upper - self.c) / d
        flip = d < 0
        return Box(
            np.where(flip, hi, lo),
            np.where(flip, lo, hi),
            np.where(flip, box.upper_closed, box.lower_closed),
            np.where(flip, box.lower_closed, box.upper_closed),
        )

    def to_dict(self):
        return {"kind": self.kind, "H": self.H.tolist(), "c": self.c.tolist()}


class MonotoneOutputMap:
    """Componentwise strictly monotone output y_i = f_i(x_i) with known inverses"""
    kind = "monotone"

    def __init__(self, functions, inverses, increasing):
        self.functions = list(functions)
        self.inverses = list(inverses)
        self.increasing = [bool(flag) for flag in increasing]

    @property
    def input_dim(self):
        return len(self.functions)

    @property
    def output_dim(self):
        return len(self.functions)

    @property
    def is_open(self):
        return True

    def __call__(self, x):
        x = as_vector(x)
        return np.array([f(xi) for f, xi in zip(self.functions, x)], dtype=float)

    def _inverse(self, i, y):
        if np.isinf(y):
            return y if self.increasing[i] else -y
        return float(self.inverses[i](y))

    def preimage_box(self, box):
        lower, upper, lower_closed, upper_closed = [], [], [], []
        for i in range(self.input_dim):
            a = self._inverse(i, box.lower[i])
            b = self._inverse(i, box.upper[i])
            if np.isnan(a) or np.isnan(b):
                raise UnsupportedVariant(f"Output bound outside the range of component {i}")
            if not self.increasing[i]:
                a, b = b, a
            lower.append(a)
            upper.append(b)
            closed = (box.lower_closed[i], box.upper_closed[i])
            if not self.increasing[i]:
                closed = closed[::-1]
            lower_closed.append(closed[0])
            upper_closed.append(closed[1])
        return Box(lower, upper, lower_closed, upper_closed)

    def to_dict(self):
        return {"kind": self.kind, "increasing": self.increasing}


class OutputForm(SetExpr):
    """{(x, w) | h(x) + w in inner}; with input_dim 0 this is the preimage {x | h(x) in inner}"""
    variant = "OutputForm"

    def __init__(self, h, inner, input_dim=None):
        self.h = h
        self.inner = inner
        self.state_dim = h.input_dim
        self.input_dim = h.output_dim if input_dim is None else input_dim
        if self.input_dim not in (0, h.output_dim):
            raise DimensionMismatch(h.output_dim, self.input_dim)
        if inner.ambient_dim != h.output_dim:
            raise DimensionMismatch(h.output_dim, inner.ambient_dim)

    @property
    def ambient_dim(self):
        return self.state_dim + self.input_dim

    @property
    def is_closed(self):
        return self.inner.is_closed

    @property
    def is_open(self):
        return self.inner.is_open

    @property
    def is_affine(self):
        return isinstance(self.h, AffineOutputMap)

    def output(self, p):
        p = self._vector(p)
        y = self.h(p[: self.state_dim])
        if self.input_dim:
            y = y + p[self.state_dim:]
        return y

    def linear_part(self):
        """Matrix L with output(p) = L p + c for an affine output map"""
        if not self.is_affine:
            raise UnsupportedVariant("Linear part of a non-affine output map")
        if self.input_dim:
            return np.hstack([self.h.H, np.eye(self.input_dim)])
        return self.h.H

    def contains(self, x, tol=0.0):
        return self.inner.contains(self.output(x), tol)

    def margin(self, x):
        return self.inner.margin(self.output(x))

    def project_point(self, x):
        if not self.is_affine:
            return None
        p = self._vector(x)
        y = self.output(p)
        target = self.inner.project_point(y)
        if np.array_equal(target, y):
            return p
        L = self.linear_part()
        correction = L.T @ np.linalg.solve(L @ L.T, target - y)
        return p + correction

    def to_dict(self):
        return {
            "variant": self.variant,
            "h": self.h.to_dict(),
            "inner": self.inner.to_dict(),
            "input_dim": self.input_dim,
        }


class Product(SetExpr):
    variant = "Product"

    def __init__(self, *factors):
        self.factors = tuple(factors)
        self.offsets = np.cumsum([0] + [f.ambient_dim for f in self.factors])

    @property
    def ambient_dim(self):
        return int(self.offsets[-1])

    @property
    def is_closed(self):
        return all(f.is_closed for f in self.factors)

    @property
    def is_open(self):
        return all(f.is_open for f in self.factors)

    def parts(self, x):
        x = self._vector(x)
        return [x[self.offsets[i]: self.offsets[i + 1]] for i in range(len(self.factors))]

    def contains(self, x, tol=0.0):
        return all(f.contains(p, tol) for f, p in zip(self.factors, self.parts(x)))

    def margin(self, x):
        return max(f.margin(p) for f, p in zip(self.factors, self.parts(x)))

    def project_point(self, x):
        pieces = [f.project_point(p) for f, p in zip(self.factors, self.parts(x))]
        if any(piece is None for piece in pieces):
            return None
        return np.concatenate(pieces)

    def to_dict(self):
        return {"variant": self.variant, "factors": [f.to_dict() for f in self.factors]}


class Intersection(SetExpr):
    variant = "Intersection"

    def __init__(self, *parts):
        dims = {p.ambient_dim for p in parts}
        if len(dims) != 1:
            raise DimensionMismatch(parts[0].ambient_dim, sorted(dims))
        self.parts = tuple(parts)

    @property
    def ambient_dim(self):
        return self.parts[0].ambient_dim

    @property
    def is_closed(self):
        return all(p.is_closed for p in self.parts)

    @property
    def is_open(self):
        return all(p.is_open for p in self.parts)

    def contains(self, x, tol=0.0):
        return all(p.contains(x, tol) for p in self.parts)

    def margin(self, x):
        return max(p.margin(x) for p in self.parts)

    def project_point(self, x, iterations=100):
        p = self._vector(x).copy()
        for _ in range(iterations):
            if self.contains(p, tol=1e-12):
                return p
            for part in self.parts:
                q = part.project_point(p)
                if q is None:
                    return None
                p = q
        return p if self.contains(p, tol=1e-9) else None

    def to_dict(self):
        return {"variant": self.variant, "parts": [p.to_dict() for p in self.parts]}


class Complement(SetExpr):
    """Set complement; of a closed set this is the open variant without a margin"""

    def __init__(self, base):
        self.base = base

    @property
    def variant(self):
        return "ComplementOpen" if self.base.is_closed else "Complement"

    @property
    def ambient_dim(self):
        return self.base.ambient_dim

    @property
    def is_closed(self):
        return self.base.is_open

    @property
    def is_open(self):
        return self.base.is_closed

    def contains(self, x, tol=0.0):
        if self.is_closed:
            return self.margin(x) <= tol
        return not self.base.contains(x)

    def margin(self, x):
        if not self.is_closed:
            raise UnsupportedVariant("Margin of an open complement")
        return -self.base.margin(x)

    def to_dict(self):
        return {"variant": self.variant, "base": self.base.to_dict()}


def complement_of(S):
    return S.base if isinstance(S, Complement) else Complement(S)


def set_contains(S, x, tol=0.0):
    return S.contains(x, tol)


def set_margin(S, x):
    if not S.is_closed:
        raise UnsupportedVariant(f"Margin of a non-closed {S.variant}")
    return S.margin(x)
