"""Exception hierarchy shared by every hybrid-sim package."""


class HybridSimError(Exception):
    """Base class for all errors raised by hybrid-sim"""


# Hybrid time domains and arcs

class InvalidDomainError(HybridSimError):
    """A raw interval list does not describe a hybrid time domain"""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class EmptyDomain(InvalidDomainError):
    pass


class NonMonotoneTimes(InvalidDomainError):
    pass


class GapBetweenJumps(InvalidDomainError):
    pass


class NonConsecutiveJ(InvalidDomainError):
    pass


class OpenInteriorInterval(InvalidDomainError):
    pass


class PointOutsideDomain(HybridSimError):
    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


# Signals

class BeyondHorizon(HybridSimError):
    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class SignalValidationError(HybridSimError):
    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class SignalOutsideW(SignalValidationError):
    pass


class PiecesDoNotTile(SignalValidationError):
    pass


class RegularityMismatch(SignalValidationError):
    pass


class NotAbsolutelyContinuous(HybridSimError):
    pass


class BreakpointNondifferentiable(HybridSimError):
    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class UnsupportedSignalShape(HybridSimError):
    pass


# Sets

class DimensionMismatch(HybridSimError):
    def __init__(self, expected, got):
        super().__init__(f"Dimension mismatch: expected {expected}, got {got}")
        self.expected = expected
        self.got = got


class UnsupportedVariant(HybridSimError):
    pass


class PointNotInSet(HybridSimError):
    pass


# Systems and simulation

class JumpSetViolation(HybridSimError):
    pass


class SelectionOutsideEnclosure(HybridSimError):
    pass


class StartOutsideFlowSet(HybridSimError):
    def __init__(self, message, margin=None):
        super().__init__(message)
        self.margin = margin


class StepUnderflow(HybridSimError):
    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class HorizonMismatch(HybridSimError):
    pass


# Viability

class EmptyKw(HybridSimError):
    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class FlowSetNotSplit(HybridSimError):
    pass


class NotOutputForm(HybridSimError):
    pass


# Front end

class ConfigError(HybridSimError):
    pass


class IoFailure(HybridSimError):
    pass
