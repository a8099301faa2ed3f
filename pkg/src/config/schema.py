"""
pydantic models for file-based configuration: sets, signals, systems and
solver settings. Every model converts to the runtime object with to_*();
load_* helpers turn validation errors into ConfigError.
"""
import json
import logging
import math
from pathlib import Path
from typing import Annotated, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from src.core.errors import ConfigError, HybridSimError
from src.core.system import AffineFlow, AffineJump, Assumption1, HybridSystem, OutputFormData, SplitInput
from src.sets.set_expr import AffineOutputMap, Box, Complement, Intersection, OutputForm, Polyhedron, Product
from src.signals.signal import ConstantFn, Piece, PolynomialFn, Regularity, Signal, TabulatedFn
from src.signals.signal_parser import parse_signal
from src.simulation.report import MODES, PRIORITIES, SimConfig

logger = logging.getLogger(__name__)

# JSON has no infinity literal; bounds may be given as the strings "inf" / "-inf"
Number = Union[float, Literal["inf", "-inf"]]


def _num(value):
    return float(value)


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class BoxModel(StrictModel):
    kind: Literal["box"] = "box"
    lower: List[Number]
    upper: List[Number]
    lower_closed: Union[bool, List[bool]] = True
    upper_closed: Union[bool, List[bool]] = True

    @model_validator(mode="after")
    def check_dims(self):
        if len(self.lower) != len(self.upper):
            raise ValueError(f"lower has {len(self.lower)} entries, upper has {len(self.upper)}")
        return self

    def to_set(self):
        return Box(
            [_num(v) for v in self.lower],
            [_num(v) for v in self.upper],
            self.lower_closed,
            self.upper_closed,
        )


class PolyhedronModel(StrictModel):
    kind: Literal["polyhedron"]
    A: List[List[float]]
    b: List[float]

    def to_set(self):
        return Polyhedron(np.array(self.A, dtype=float), self.b)


class OutputFormModel(StrictModel):
    """{(x, w) | H x + c + w in inner}"""
    kind: Literal["output_form"]
    H: List[List[float]]
    c: Optional[List[float]] = None
    inner: BoxModel

    def output_map(self):
        return AffineOutputMap(np.array(self.H, dtype=float), self.c)

    def to_set(self):
        return OutputForm(self.output_map(), self.inner.to_set())


class ComplementModel(StrictModel):
    kind: Literal["complement"]
    base: "SetModel"

    def to_set(self):
        return Complement(self.base.to_set())


class ProductModel(StrictModel):
    kind: Literal["product"]
    factors: List["SetModel"]

    def to_set(self):
        return Product(*[f.to_set() for f in self.factors])


class IntersectionModel(StrictModel):
    kind: Literal["intersection"]
    parts: List["SetModel"]

    def to_set(self):
        return Intersection(*[p.to_set() for p in self.parts])


SetModel = Annotated[
    Union[BoxModel, PolyhedronModel, OutputFormModel, ComplementModel, ProductModel, IntersectionModel],
    Field(discriminator="kind"),
]

for _model in (ComplementModel, ProductModel, IntersectionModel):
    _model.model_rebuild()


class PieceModel(StrictModel):
    start: float
    end: Number
    kind: Literal["constant", "affine", "polynomial", "tabulated"]
    value: Optional[List[float]] = None
    coefficients: Optional[List[List[float]]] = None
    knots: Optional[List[float]] = None
    values: Optional[List[List[float]]] = None

    @model_validator(mode="after")
    def check_payload(self):
        needed = {
            "constant": ("value",),
            "affine": ("coefficients",),
            "polynomial": ("coefficients",),
            "tabulated": ("knots", "values"),
        }[self.kind]
        missing = [name for name in needed if getattr(self, name) is None]
        if missing:
            raise ValueError(f"{self.kind} piece needs {', '.join(missing)}")
        return self

    def to_piece(self):
        if self.kind == "constant":
            fn = ConstantFn(self.value)
        elif self.kind == "tabulated":
            fn = TabulatedFn(self.knots, self.values)
        else:
            fn = PolynomialFn(self.coefficients)
        return Piece(self.start, _num(self.end), fn)


class OverrideModel(StrictModel):
    t: float
    value: List[float]


class SignalModel(StrictModel):
    """Either a mini-language line or an explicit piece list"""
    text: Optional[str] = None
    pieces: Optional[List[PieceModel]] = None
    overrides: List[OverrideModel] = Field(default_factory=list)
    regularity: Optional[Literal["Measurable", "Cadlag", "Continuous", "AbsContinuous"]] = None
    horizon: Number = "inf"

    @model_validator(mode="after")
    def one_form(self):
        if (self.text is None) == (self.pieces is None):
            raise ValueError("Give exactly one of 'text' or 'pieces'")
        return self

    def to_signal(self, value_set=None):
        if self.text is not None:
            signal = parse_signal(self.text, value_set, _num(self.horizon))
            for entry in self.overrides:
                signal = signal.with_override(entry.t, entry.value)
            return signal
        regularity = Regularity.parse(self.regularity) if self.regularity else None
        return Signal.create(
            [p.to_piece() for p in self.pieces],
            value_set,
            {o.t: o.value for o in self.overrides},
            regularity,
        )


class AffineFlowModel(StrictModel):
    A: List[List[float]]
    B: List[List[float]]
    c: Optional[List[float]] = None
    spread: Optional[BoxModel] = None

    def to_flow(self):
        spread = self.spread.to_set() if self.spread is not None else None
        return AffineFlow(self.A, self.B, self.c, spread)


class JumpBranchModel(StrictModel):
    A: List[List[float]]
    B: List[List[float]]
    c: List[float]


class AffineJumpModel(StrictModel):
    branches: List[JumpBranchModel] = Field(default_factory=list)

    def to_jump(self):
        return AffineJump([(b.A, b.B, b.c) for b in self.branches])


class OutputFormDataModel(StrictModel):
    """Output-form declaration for the set-level existence test"""
    H: List[List[float]]
    c: Optional[List[float]] = None
    c_y: BoxModel
    dc_y: BoxModel
    range_h: Optional[BoxModel] = None
    h_open: bool = True

    def to_data(self):
        h = AffineOutputMap(np.array(self.H, dtype=float), self.c)
        range_h = self.range_h.to_set() if self.range_h else Box.whole(h.output_dim)
        return OutputFormData(h, self.c_y.to_set(), self.dc_y.to_set(), range_h, self.h_open)


class SplitModel(StrictModel):
    n_w1: int = Field(ge=0)
    c1: SetModel

    def to_split(self):
        return SplitInput(self.n_w1, self.c1.to_set())


class SystemModel(StrictModel):
    name: str
    state_dim: int = Field(gt=0)
    C: SetModel
    D: SetModel
    W: BoxModel
    flow: AffineFlowModel
    jump: AffineJumpModel = Field(default_factory=AffineJumpModel)
    output_form: Optional[OutputFormDataModel] = None
    split: Optional[SplitModel] = None
    default_priority: Literal["JumpPriority", "FlowPriority", "EnumerateBoth"] = "JumpPriority"
    assumption1_declared: bool = False
    description: str = ""

    def to_system(self):
        declared = self.assumption1_declared
        return HybridSystem(
            name=self.name,
            flow_set=self.C.to_set(),
            jump_set=self.D.to_set(),
            flow_map=self.flow.to_flow(),
            jump_map=self.jump.to_jump(),
            input_set=self.W.to_set(),
            state_dim=self.state_dim,
            assumption1=Assumption1(declared, declared, declared),
            output_form=self.output_form.to_data() if self.output_form else None,
            split=self.split.to_split() if self.split else None,
            default_priority=self.default_priority,
            description=self.description,
        )


class SimConfigModel(StrictModel):
    """Optional SimConfig overrides; unset fields keep the base value"""
    mode: Optional[Literal[MODES]] = None
    priority: Optional[Literal[PRIORITIES]] = None
    t_max: Optional[float] = Field(default=None, gt=0)
    j_max: Optional[int] = Field(default=None, ge=0)
    step_init: Optional[float] = Field(default=None, gt=0)
    step_min: Optional[float] = Field(default=None, gt=0)
    max_step: Optional[float] = Field(default=None, gt=0)
    rtol: Optional[float] = Field(default=None, gt=0)
    atol: Optional[float] = Field(default=None, gt=0)
    event_tol: Optional[float] = Field(default=None, gt=0)
    margin_tol: Optional[float] = Field(default=None, ge=0)
    branch_budget: Optional[int] = Field(default=None, ge=1)
    blowup_threshold: Optional[float] = Field(default=None, gt=0)
    j_zeno: Optional[int] = Field(default=None, ge=1)
    t_zeno: Optional[float] = Field(default=None, ge=0)

    def to_config(self, base=None):
        base = base or SimConfig()
        return base.with_overrides(**self.model_dump(exclude_none=True))


class ProblemFile(StrictModel):
    """Custom problem: a system, optionally with an input signal and solver settings"""
    system: SystemModel
    signal: Optional[SignalModel] = None
    sim: SimConfigModel = Field(default_factory=SimConfigModel)


def _read_json(path):
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Config file {path} does not exist")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path} is not valid JSON: {e}")


def _validated(model, data, source):
    try:
        return model.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"Invalid {model.__name__} in {source}: {e}")


def load_problem(path):
    """
    Read a problem file

    Returns:
        (HybridSystem, Signal or None, SimConfigModel)

    Raises:
        ConfigError: unreadable file, schema violation or inconsistent data
    """
    problem = _validated(ProblemFile, _read_json(path), path)
    try:
        system = problem.system.to_system()
        signal = problem.signal.to_signal(system.input_set) if problem.signal else None
    except HybridSimError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"{path}: {e}")
    logger.info("Loaded system %s from %s", system.name, path)
    return system, signal, problem.sim


def load_signal(path, value_set=None):
    """Signal from a JSON SignalModel file or a file holding one mini-language line"""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Signal file {path} does not exist")
    if path.suffix.lower() != ".json":
        return parse_signal(path.read_text(encoding="utf-8").strip(), value_set)
    model = _validated(SignalModel, _read_json(path), path)
    return model.to_signal(value_set)


def parse_region(text, dim):
    """'lo:hi' per axis, comma separated (for example '-1.7:1.7')"""
    try:
        bounds = [tuple(float(v) for v in axis.split(":")) for axis in text.split(",")]
    except ValueError:
        raise ConfigError(f"Could not parse region '{text}'")
    if len(bounds) != dim or any(len(b) != 2 for b in bounds):
        raise ConfigError(f"Region '{text}' must give lo:hi for each of {dim} axes")
    lower, upper = zip(*bounds)
    if any(lo > hi or math.isnan(lo) or math.isnan(hi) for lo, hi in bounds):
        raise ConfigError(f"Region '{text}' has an empty axis")
    return Box(lower, upper)
