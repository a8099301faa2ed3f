"""Run configuration and result records for the hybrid solver."""
import math
from dataclasses import asdict, dataclass, field, replace

from src.core.errors import ConfigError

MODES = ("E", "AE")
PRIORITIES = ("JumpPriority", "FlowPriority", "EnumerateBoth")


@dataclass(frozen=True)
class SimConfig:
    mode: str = "E"
    priority: str = "JumpPriority"
    t_max: float = 10.0
    j_max: int = 100
    step_init: float = 1e-3
    step_min: float = 1e-12
    max_step: float = 0.05
    rtol: float = 1e-10
    atol: float = 1e-12
    event_tol: float = 1e-8
    margin_tol: float = 1e-9
    branch_budget: int = 16
    blowup_threshold: float = 1e6
    j_zeno: int = 50
    t_zeno: float = 1e-6

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got '{self.mode}'")
        if self.priority not in PRIORITIES:
            raise ConfigError(f"priority must be one of {PRIORITIES}, got '{self.priority}'")
        if not self.t_max > 0:
            raise ConfigError(f"t_max must be positive, got {self.t_max}")
        if self.j_max < 0:
            raise ConfigError(f"j_max must be nonnegative, got {self.j_max}")
        if not self.event_tol > 0:
            raise ConfigError(f"event_tol must be positive, got {self.event_tol}")
        if not 0 < self.step_min < self.step_init:
            raise ConfigError(f"Need 0 < step_min < step_init, got {self.step_min} and {self.step_init}")
        if self.branch_budget < 1:
            raise ConfigError("branch_budget must be at least 1")

    def with_overrides(self, **overrides):
        """Copy with the non-None overrides applied"""
        changes = {k: v for k, v in overrides.items() if v is not None}
        unknown = set(changes) - set(self.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"Unknown SimConfig fields: {sorted(unknown)}")
        return replace(self, **changes)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class FlowExit:
    """Why a flow segment stopped"""
    LEFT_FLOW_SET = "LeftFlowSet"
    ENTERED_JUMP_SET = "EnteredJumpSet"
    BUDGET = "Budget"
    BLOWUP = "Blowup"
    SIGNAL_BREAKPOINT = "SignalBreakpoint"

    kind: str
    time: float
    margin: float = None
    detail: str = ""

    def to_dict(self):
        return {"kind": self.kind, "time": self.time, "margin": self.margin, "detail": self.detail}


@dataclass(frozen=True)
class Termination:
    BUDGET_EXHAUSTED = "BudgetExhausted"
    BLOWUP = "EndsWithFlowBlowup"
    DEAD_STATE = "DeadState"
    ZENO = "ZenoSuspected"
    STALLED = "Stalled"

    kind: str
    t: float
    j: int
    cause: str = None
    budget: str = None
    detail: str = ""

    def to_dict(self):
        out = {"kind": self.kind, "at": {"t": self.t, "j": self.j}}
        if self.cause is not None:
            out["cause"] = self.cause
            out["jump_possible"] = False
            out["flow_possible"] = False
        if self.budget is not None:
            out["budget"] = self.budget
        if self.detail:
            out["detail"] = self.detail
        return out


# dead-state causes
INPUT_DISCONTINUITY = "InputDiscontinuity"
GEOMETRY_NO_OVERLAP = "GeometryNoOverlap"
AFTER_JUMP = "AfterJump"


@dataclass
class SolutionReport:
    arc: object
    termination: Termination
    mode: str
    config: SimConfig
    diagnostics: list = field(default_factory=list)
    branch: tuple = ()

    @property
    def is_dead(self):
        return self.termination.kind == Termination.DEAD_STATE

    @property
    def final_point(self):
        return self.arc.final_point


def diagnostic(kind, t, j, **data):
    """One per-event log entry; non-finite floats are stored as strings"""
    entry = {"event": kind, "t": float(t), "j": int(j)}
    for key, value in data.items():
        if isinstance(value, float) and not math.isfinite(value):
            value = str(value)
        entry[key] = value
    return entry
