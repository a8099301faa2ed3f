"""Hybrid system data H = (C, F, D, G, W) and pointwise queries."""
import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from src.core.errors import (
    DimensionMismatch,
    JumpSetViolation,
    SelectionOutsideEnclosure,
    UnsupportedVariant,
)
from src.sets.calculus import project_x
from src.sets.set_expr import Box, as_vector, complement_of

logger = logging.getLogger(__name__)


class FlowMap:
    """
    Set-valued flow map carried as a Box enclosure plus one selection

    Args:
        selection: callable (x, w) -> vector, the right-hand side that gets integrated
        enclosure: callable (x, w) -> Box containing F(x, w); defaults to the selection point
        name: label used in reports
    """

    def __init__(self, selection, enclosure=None, name="custom"):
        self._selection = selection
        self._enclosure = enclosure
        self.name = name

    @property
    def is_single_valued(self):
        return self._enclosure is None

    def select(self, x, w):
        return as_vector(self._selection(x, w))

    def enclosure(self, x, w):
        if self._enclosure is None:
            return Box.point(self.select(x, w))
        return self._enclosure(x, w)

    def to_dict(self):
        return {"kind": self.name}


class AffineFlow(FlowMap):
    """F(x, w) = A x + B w + c + spread, selection A x + B w + c"""

    def __init__(self, A, B, c=None, spread=None, name="affine"):
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        self.B = np.atleast_2d(np.asarray(B, dtype=float))
        n_x = self.A.shape[0]
        self.c = np.zeros(n_x) if c is None else as_vector(c)
        self.spread = spread
        super().__init__(self._affine, None if spread is None else self._box, name)

    def _affine(self, x, w):
        return self.A @ as_vector(x) + self.B @ as_vector(w) + self.c

    def _box(self, x, w):
        centre = self._affine(x, w)
        return Box(centre + self.spread.lower, centre + self.spread.upper)

    @property
    def is_single_valued(self):
        return self.spread is None or self.spread.is_point

    def to_dict(self):
        out = {"kind": self.name, "A": self.A.tolist(), "B": self.B.tolist(), "c": self.c.tolist()}
        if self.spread is not None:
            out["spread"] = self.spread.to_dict()
        return out


class JumpMap:
    """Finite list of jump selections; successors are reported in list order"""

    def __init__(self, selections, name="custom"):
        self.selections = list(selections)
        self.name = name

    def successors(self, x, w):
        return [as_vector(g(x, w)) for g in self.selections]

    def to_dict(self):
        return {"kind": self.name, "branches": len(self.selections)}


class AffineJump(JumpMap):
    """x+ in {A_k x + B_k w + c_k}"""

    def __init__(self, branches, name="affine"):
        self.branches = [
            (np.atleast_2d(np.asarray(A, dtype=float)), np.atleast_2d(np.asarray(B, dtype=float)), as_vector(c))
            for A, B, c in branches
        ]
        super().__init__([self._branch(k) for k in range(len(self.branches))], name)

    def _branch(self, k):
        A, B, c = self.branches[k]
        return lambda x, w: A @ as_vector(x) + B @ as_vector(w) + c

    def to_dict(self):
        return {
            "kind": self.name,
            "branches": [{"A": A.tolist(), "B": B.tolist(), "c": c.tolist()} for A, B, c in self.branches],
        }


@dataclass(frozen=True)
class Assumption1:
    """User declaration; outer semicontinuity cannot be checked on a black-box map"""
    outer_semicontinuous: bool = False
    locally_bounded: bool = False
    convex_nonempty: bool = False

    @property
    def declared(self):
        return self.outer_semicontinuous and self.locally_bounded and self.convex_nonempty


@dataclass(frozen=True)
class OutputFormData:
    """C = {h(x) + w in C_y}, D = {h(x) + w in D_y} with D_y^c given as an open box"""
    h: object
    c_y: Box
    dc_y: Box
    range_h: Box
    h_open: bool = True


@dataclass(frozen=True)
class SplitInput:
    """C = C1 x R^{n_w2} for inputs split as (w1, w2)"""
    n_w1: int
    c1: object


@dataclass(frozen=True, eq=False)
class HybridSystem:
    name: str
    flow_set: object
    jump_set: object
    flow_map: FlowMap
    jump_map: JumpMap
    input_set: Box
    state_dim: int
    assumption1: Assumption1 = field(default_factory=Assumption1)
    output_form: OutputFormData = None
    split: SplitInput = None
    default_priority: str = "JumpPriority"
    description: str = ""

    def __post_init__(self):
        n = self.state_dim + self.input_dim
        for S in (self.flow_set, self.jump_set):
            if S.ambient_dim != n:
                raise DimensionMismatch(n, S.ambient_dim)
        if not self.flow_set.is_closed or not self.input_set.is_closed:
            raise UnsupportedVariant("The flow set C and the input set W must be closed")

    @property
    def input_dim(self):
        return self.input_set.ambient_dim

    def pair(self, x, w_val):
        x, w_val = as_vector(x), as_vector(w_val)
        if x.shape[0] != self.state_dim:
            raise DimensionMismatch(self.state_dim, x.shape[0])
        if w_val.shape[0] != self.input_dim:
            raise DimensionMismatch(self.input_dim, w_val.shape[0])
        return np.concatenate([x, w_val])

    @cached_property
    def c0(self):
        """C_0 = Pi_x(C, W)"""
        return project_x(self.flow_set, self.input_set, self.state_dim)

    @cached_property
    def no_jump_projection(self):
        """Pi_x(D^c, W)"""
        return project_x(complement_of(self.jump_set), self.input_set, self.state_dim)

    def flow_margin(self, x, w_val):
        return self.flow_set.margin(self.pair(x, w_val))

    def in_flow_set(self, x, w_val, tol=0.0):
        return self.flow_set.contains(self.pair(x, w_val), tol)

    def to_dict(self):
        return {
            "name": self.name,
            "state_dim": self.state_dim,
            "input_dim": self.input_dim,
            "C": self.flow_set.to_dict(),
            "D": self.jump_set.to_dict(),
            "W": self.input_set.to_dict(),
            "F": self.flow_map.to_dict(),
            "G": self.jump_map.to_dict(),
            "assumption1_declared": self.assumption1.declared,
        }


def can_jump(H, x, w_val, tol=0.0):
    """(x, w_val) in D"""
    return H.jump_set.contains(H.pair(x, w_val), tol)


def jump_successors(H, x, w_val, tol=0.0):
    """
    All jump selections at (x, w_val)

    Raises:
        JumpSetViolation: (x, w_val) is not in D
    """
    if not can_jump(H, x, w_val, tol):
        raise JumpSetViolation(f"({as_vector(x).tolist()}, {as_vector(w_val).tolist()}) is not in the jump set")
    return H.jump_map.successors(as_vector(x), as_vector(w_val))


def flow_enclosure(H, x, w_val):
    H.pair(x, w_val)
    return H.flow_map.enclosure(as_vector(x), as_vector(w_val))


def flow_select(H, x, w_val, tol=1e-9):
    """
    Declared flow selection at (x, w_val)

    Raises:
        SelectionOutsideEnclosure: the selection is not in the F enclosure
    """
    H.pair(x, w_val)
    x, w_val = as_vector(x), as_vector(w_val)
    value = H.flow_map.select(x, w_val)
    if not H.flow_map.is_single_valued:
        box = H.flow_map.enclosure(x, w_val)
        if not box.contains(value, tol * (1.0 + float(np.max(np.abs(value), initial=0.0)))):
            raise SelectionOutsideEnclosure(f"Selection {value.tolist()} is outside {box!r}")
    return value


def c0_contains(H, x, tol=0.0):
    """Membership in C_0 = Pi_x(C, W); UnsupportedVariant propagates"""
    x = as_vector(x)
    if x.shape[0] != H.state_dim:
        raise DimensionMismatch(H.state_dim, x.shape[0])
    return H.c0.contains(x, tol)


def check_selection(H, samples, tol=1e-9):
    """Sampled check that the selection stays in the enclosure; returns offending points"""
    bad = []
    for p in samples:
        x, w_val = p[: H.state_dim], p[H.state_dim:]
        try:
            flow_select(H, x, w_val, tol)
        except SelectionOutsideEnclosure:
            bad.append(np.array(p))
    if bad:
        logger.warning("%s: selection leaves the enclosure at %d of %d points", H.name, len(bad), len(samples))
    return bad
