"""Built-in scenarios.

    ex1      xdot = x on |x + w| <= 1.5, x+ = -w on |x + w| >= 1, W = [-0.2, 0.2]
    ex2c     the same system with flow bound c and W = [-delta, delta]
    ex3      c = 1 with unrestricted inputs W = R
    remark2  xdot = -x - w on x + w <= 1, x+ = -w on -2 <= x + w <= 2, W = R
    riccati  xdot = x^2 on R x W, no jumps
    split    xdot = -x + w on x <= 1 for any w in W, no jumps
"""
import logging

import numpy as np

from src.core.errors import ConfigError
from src.core.system import (
    AffineFlow,
    AffineJump,
    Assumption1,
    FlowMap,
    HybridSystem,
    JumpMap,
    OutputFormData,
    SplitInput,
)
from src.sets.set_expr import AffineOutputMap, Box, Complement, OutputForm, Polyhedron, Product

logger = logging.getLogger(__name__)

DECLARED = Assumption1(outer_semicontinuous=True, locally_bounded=True, convex_nonempty=True)


def _reset_to_minus_w():
    return AffineJump([([[0.0]], [[-1.0]], [0.0])], name="x+ = -w")


def event_driven_reset(c=1.5, delta=0.2, name="ex2c", bounded_inputs=True):
    """
    Event-driven reset system with noisy measurement y = x + w

    Args:
        c: flow-set bound |x + w| <= c
        delta: half-width of W (ignored when bounded_inputs is False)
        bounded_inputs: False gives W = R
    """
    if c <= 0:
        raise ConfigError(f"Flow bound c must be positive, got {c}")
    if bounded_inputs and delta < 0:
        raise ConfigError(f"Input half-width delta must be nonnegative, got {delta}")
    h = AffineOutputMap.identity(1)
    c_y = Box.interval(-c, c)
    dc_y = Box.interval(-1.0, 1.0, False, False)
    W = Box.interval(-delta, delta) if bounded_inputs else Box.whole(1)
    return HybridSystem(
        name=name,
        flow_set=OutputForm(h, c_y),
        jump_set=Complement(OutputForm(h, dc_y)),
        flow_map=AffineFlow([[1.0]], [[0.0]], name="xdot = x"),
        jump_map=_reset_to_minus_w(),
        input_set=W,
        state_dim=1,
        assumption1=DECLARED,
        output_form=OutputFormData(h=h, c_y=c_y, dc_y=dc_y, range_h=Box.whole(1), h_open=True),
        description=f"xdot = x on |x+w| <= {c:g}, x+ = -w on |x+w| >= 1",
    )


def example1():
    return event_driven_reset(1.5, 0.2, name="ex1")


def example2(c=1.0, delta=0.2):
    return event_driven_reset(c, delta, name="ex2c")


def example3(c=1.0):
    return event_driven_reset(c, name="ex3", bounded_inputs=False)


def remark2():
    return HybridSystem(
        name="remark2",
        flow_set=Polyhedron([[1.0, 1.0]], [1.0]),
        jump_set=OutputForm(AffineOutputMap.identity(1), Box.interval(-2.0, 2.0)),
        flow_map=AffineFlow([[-1.0]], [[-1.0]], name="xdot = -x - w"),
        jump_map=_reset_to_minus_w(),
        input_set=Box.whole(1),
        state_dim=1,
        assumption1=DECLARED,
        # flowing from x = 1 under w = -1 is the documented behaviour
        default_priority="FlowPriority",
        description="xdot = -x - w on x + w <= 1, x+ = -w on -2 <= x + w <= 2",
    )


def riccati(delta=0.2):
    W = Box.interval(-delta, delta)
    return HybridSystem(
        name="riccati",
        flow_set=Product(Box.whole(1), W),
        jump_set=Box.empty(2),
        flow_map=FlowMap(lambda x, w: np.asarray(x, dtype=float) ** 2, name="xdot = x^2"),
        jump_map=JumpMap([], name="none"),
        input_set=W,
        state_dim=1,
        assumption1=DECLARED,
        description="xdot = x^2 on R x W; finite escape at t = 1/x0",
    )


def split_input(delta=0.5):
    """C = {x <= 1} x R: the whole input is the measurable part w2"""
    W = Box.interval(-delta, delta)
    c1 = Box([-np.inf], [1.0])
    return HybridSystem(
        name="split",
        flow_set=Product(c1, Box.whole(1)),
        jump_set=Box.empty(2),
        flow_map=AffineFlow([[-1.0]], [[1.0]], name="xdot = -x + w"),
        jump_map=JumpMap([], name="none"),
        input_set=W,
        state_dim=1,
        assumption1=DECLARED,
        split=SplitInput(n_w1=0, c1=c1),
        description="xdot = -x + w on x <= 1, no jumps",
    )


SCENARIOS = {
    "ex1": (lambda c=None, delta=None: example1(), "Event-driven reset with measurement noise, c = 1.5"),
    "ex2c": (
        lambda c=None, delta=None: example2(1.0 if c is None else c, 0.2 if delta is None else delta),
        "Reset system with flow bound c (default 1) and W = [-delta, delta]",
    ),
    "ex3": (lambda c=None, delta=None: example3(1.0 if c is None else c), "Reset system with c = 1 and W = R"),
    "remark2": (lambda c=None, delta=None: remark2(), "Input discontinuity ends a solution"),
    "riccati": (
        lambda c=None, delta=None: riccati(0.2 if delta is None else delta),
        "Scalar Riccati flow with finite escape",
    ),
    "split": (
        lambda c=None, delta=None: split_input(0.5 if delta is None else delta),
        "Flow set independent of the measurable input",
    ),
}


def scenario_names():
    return sorted(SCENARIOS)


def scenario_descriptions():
    return {name: SCENARIOS[name][1] for name in scenario_names()}


def build_scenario(name, c=None, delta=None):
    """
    Build a registered scenario

    Raises:
        ConfigError: unknown scenario name
    """
    if name not in SCENARIOS:
        raise ConfigError(f"Unknown scenario '{name}'. Available: {', '.join(scenario_names())}")
    H = SCENARIOS[name][0](c=c, delta=delta)
    logger.info("Built scenario %s: %s", name, H.description)
    return H


def ex2_sufficient_overlap(c, delta):
    """Overlap condition c > 1 and 0 <= delta <= (c - 1) / 2 that secures existence for all measurable inputs"""
    return c > 1 and 0 <= delta <= (c - 1) / 2


def ex2_witness_family(eta):
    """(c, xi) = (1.4 - eta, 1.2 - eta / 2) for which neither flow nor a jump is possible"""
    return 1.4 - eta, 1.2 - eta / 2
