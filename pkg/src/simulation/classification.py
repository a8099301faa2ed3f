"""Maps solver outcomes to the maximal-solution trichotomy."""
import logging

from src.core.errors import UnsupportedVariant
from src.signals.signal import Regularity
from src.simulation.report import INPUT_DISCONTINUITY, Termination

logger = logging.getLogger(__name__)

COMPLETE_EVIDENCE = "CompleteEvidence"
ENDS_WITH_FLOW = "EndsWithFlow"
ENDS_WITH_JUMP_DEAD = "EndsWithJumpDead"
ENDS_AT_INPUT_DISCONTINUITY = "EndsAtInputDiscontinuity"
UNDETERMINED = "Undetermined"

CLASSIFICATIONS = (
    COMPLETE_EVIDENCE,
    ENDS_WITH_FLOW,
    ENDS_WITH_JUMP_DEAD,
    ENDS_AT_INPUT_DISCONTINUITY,
    UNDETERMINED,
)


def _outside_c0(H, x):
    try:
        return not H.c0.contains(x)
    except UnsupportedVariant:
        logger.debug("C0 is not decidable for %s; treating the jump end as undetermined", H.name)
        return False


def classify_termination(report, H, w):
    """
    Classify a SolutionReport

    BudgetExhausted is only evidence of completeness, qualified by the budget
    that ran out. A dead state reached by a jump whose landing point is not in
    C0 ends with a jump; a dead state at a discontinuity of a cadlag input is
    the input-discontinuity variant of that case.

    Returns:
        one of CLASSIFICATIONS
    """
    termination = report.termination
    last = report.arc.domain.last
    if termination.kind == Termination.BUDGET_EXHAUSTED:
        return COMPLETE_EVIDENCE
    if termination.kind == Termination.BLOWUP and last.right_open:
        return ENDS_WITH_FLOW
    if termination.kind == Termination.DEAD_STATE:
        if last.is_point and last.j >= 1 and _outside_c0(H, report.arc.final_state):
            return ENDS_WITH_JUMP_DEAD
        if termination.cause == INPUT_DISCONTINUITY and w.regularity_tag >= Regularity.CADLAG:
            return ENDS_AT_INPUT_DISCONTINUITY
    return UNDETERMINED
