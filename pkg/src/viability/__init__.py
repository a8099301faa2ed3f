from src.viability.margins import SamplerConfig, existence_over_region, output_form_existence, vc_ball_margin
from src.viability.probes import completeness_sweep, nontrivial_existence, vc_probe
from src.viability.tangent import vc_split, vc_tangent_ac, vc_tangent_continuous
from src.viability.verdict import (
    FAILS_WITH_WITNESS,
    HOLDS,
    INCONCLUSIVE,
    Verdict,
    Witness,
    certificate,
)
