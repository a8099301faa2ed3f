from src.scenarios.registry import (
    SCENARIOS,
    build_scenario,
    ex2_sufficient_overlap,
    ex2_witness_family,
    scenario_descriptions,
    scenario_names,
)
