from src.signals.signal import (
    ConstantFn,
    Piece,
    PolynomialFn,
    Regularity,
    Signal,
    TabulatedFn,
    derivative_breakpoints,
    signal_classify,
    signal_derivative,
    signal_eval,
    signal_limits,
    signal_shift,
)
from src.signals.signal_parser import PRESETS, parse_signal
