"""Validated description of one CLI run."""
import logging
import os
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from src.config.schema import SimConfigModel
from src.core.errors import ConfigError

logger = logging.getLogger(__name__)

COMMANDS = ("simulate", "check-existence", "check-viability", "check-setcond", "validate-arc", "scenario")
DEFAULT_OUTPUT_DIR = "hybrid_sim_output"


def default_output_dir():
    return os.environ.get("HYBRID_SIM_OUTPUT_DIR", DEFAULT_OUTPUT_DIR)


class RunManifest(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    command: Literal[COMMANDS]
    scenario: Optional[str] = None
    config_path: Optional[str] = None
    overrides: SimConfigModel = Field(default_factory=SimConfigModel)
    output_dir: str = Field(default_factory=default_output_dir)
    seed: int = 0

    @model_validator(mode="after")
    def check_source(self):
        if self.scenario is not None and self.config_path is not None:
            raise ValueError("Give either a scenario or a config file, not both")
        if self.config_path is not None and not Path(self.config_path).exists():
            raise ValueError(f"Config file {self.config_path} does not exist")
        return self

    @property
    def source(self):
        return self.scenario if self.scenario is not None else self.config_path

    def config(self, base=None):
        return self.overrides.to_config(base)

    def to_dict(self):
        return self.model_dump(mode="json")


def build_manifest(**fields):
    """
    RunManifest from keyword fields; None values fall back to defaults

    Raises:
        ConfigError
    """
    overrides = {k: v for k, v in (fields.pop("overrides", None) or {}).items() if v is not None}
    fields = {k: v for k, v in fields.items() if v is not None}
    try:
        manifest = RunManifest(overrides=SimConfigModel(**overrides), **fields)
    except ValidationError as e:
        raise ConfigError(f"Invalid run settings: {e}")
    logger.debug("Run manifest: %s", manifest.to_dict())
    return manifest
