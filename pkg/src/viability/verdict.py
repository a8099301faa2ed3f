"""Verdicts and certificates of the viability checkers."""
import hashlib
import logging
from dataclasses import dataclass, field

from src.utils.formatting import canonical_json, jsonable

logger = logging.getLogger(__name__)

HOLDS = "Holds"
INCONCLUSIVE = "Inconclusive"
FAILS_WITH_WITNESS = "FailsWithWitness"

CERTIFICATE_SCHEMA = "hybrid-sim/certificate/1"


@dataclass(frozen=True)
class Witness:
    point: tuple
    time: float = None
    margin: float = None
    note: str = ""

    def to_dict(self):
        return {"point": list(self.point), "time": self.time, "margin": self.margin, "note": self.note}


@dataclass(frozen=True)
class Verdict:
    """
    Outcome of a viability test

    Tangent-cone tests are sufficient conditions only and never return
    FailsWithWitness; grid-checked Holds verdicts carry their grid in
    `parameters` and are labeled by `certified`.
    """
    status: str
    method: str
    witness: Witness = None
    parameters: dict = field(default_factory=dict)
    certified: bool = False
    details: dict = field(default_factory=dict)

    @property
    def holds(self):
        return self.status == HOLDS

    @property
    def fails(self):
        return self.status == FAILS_WITH_WITNESS

    @property
    def inconclusive(self):
        return self.status == INCONCLUSIVE

    def to_dict(self):
        out = {
            "status": self.status,
            "method": self.method,
            "certified": self.certified,
            "grid_verified": self.status == HOLDS and not self.certified,
            "parameters": jsonable(self.parameters),
        }
        if self.witness is not None:
            out["witness"] = jsonable(self.witness.to_dict())
        if self.details:
            out["details"] = jsonable(self.details)
        return out


def holds(method, **kwargs):
    return Verdict(HOLDS, method, **kwargs)


def inconclusive(method, **kwargs):
    return Verdict(INCONCLUSIVE, method, **kwargs)


def fails(method, witness, **kwargs):
    return Verdict(FAILS_WITH_WITNESS, method, witness=witness, **kwargs)


def inputs_hash(*parts):
    """sha256 of the canonical JSON of the checker inputs"""
    return hashlib.sha256(canonical_json(jsonable(list(parts))).encode("utf-8")).hexdigest()


def certificate(condition, verdict, inputs):
    """Certificate record with a stable schema for regression testing"""
    return {
        "schema": CERTIFICATE_SCHEMA,
        "condition": condition,
        "inputs_hash": inputs_hash(inputs),
        "verdict": verdict.status,
        "method": verdict.method,
        "certified": verdict.certified,
        "parameters": jsonable(verdict.parameters),
        "witness": None if verdict.witness is None else jsonable(verdict.witness.to_dict()),
        "details": jsonable(verdict.details),
    }
