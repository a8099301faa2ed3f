from src.config.schema import (
    ProblemFile,
    SignalModel,
    SimConfigModel,
    SystemModel,
    load_problem,
    load_signal,
    parse_region,
)
