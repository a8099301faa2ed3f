from src.core.errors import HybridSimError
from src.core.hybrid_time import (
    ArcSegment,
    HybridArc,
    HybridTimeDomain,
    HybridTimePoint,
    TimeInterval,
    arc_eval,
    arc_is_nontrivial,
    htd_sup,
    htd_validate,
)
from src.core.system import (
    AffineFlow,
    AffineJump,
    Assumption1,
    FlowMap,
    HybridSystem,
    JumpMap,
    can_jump,
    c0_contains,
    flow_enclosure,
    flow_select,
    jump_successors,
)
