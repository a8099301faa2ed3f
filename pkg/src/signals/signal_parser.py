"""One-line signal mini-language used on the command line.

    const:0.2
    steps:0:-1,1:2
    affine:0.2,-0.1
    const:0.2+override:0=-0.2

Forms are joined with '+' followed by a form name. Named presets
(`ex2-witness`, `remark2`) expand to their full description.
"""
import logging
import math
import re

from src.core.errors import ConfigError
from src.signals.signal import ConstantFn, Piece, PolynomialFn, Signal

logger = logging.getLogger(__name__)

PRESETS = {
    "ex2-witness": "const:0.2+override:0=-0.2",
    "remark2": "steps:0:-1,1:2",
}

_FORM_SPLIT = re.compile(r"\+(?=[a-z])")


def _floats(text, what):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"Could not parse {what} values from '{text}'")


def _parse_steps(body):
    times, values = [], []
    for entry in body.split(","):
        parts = entry.split(":")
        if len(parts) != 2:
            raise ConfigError(f"Step entry '{entry}' must look like t:v")
        times.append(float(parts[0]))
        values.append(float(parts[1]))
    if not times or times[0] != 0.0:
        raise ConfigError("Step signals must start at t=0")
    return times, values


def _parse_override(body):
    if "=" not in body:
        raise ConfigError(f"Override '{body}' must look like t=v")
    t, v = body.split("=", 1)
    return float(t), _floats(v, "override")


def parse_signal(text, value_set=None, horizon=math.inf):
    """
    Parse a mini-language signal description

    Args:
        text: description or preset name
        value_set: Box W the signal must stay in
        horizon: end of the last piece

    Returns:
        Signal

    Raises:
        ConfigError on malformed text; SignalValidationError subclasses on invalid signals
    """
    text = PRESETS.get(text.strip(), text.strip())
    pieces = None
    overrides = {}
    for form in _FORM_SPLIT.split(text):
        kind, _, body = form.partition(":")
        kind = kind.strip().lower()
        if kind == "const":
            pieces = [Piece(0.0, horizon, ConstantFn(_floats(body, "constant")))]
        elif kind == "steps":
            times, values = _parse_steps(body)
            bounds = times + [horizon]
            pieces = [Piece(a, b, ConstantFn(v)) for a, b, v in zip(bounds[:-1], bounds[1:], values)]
        elif kind == "affine":
            coeffs = _floats(body, "affine")
            if len(coeffs) != 2:
                raise ConfigError(f"affine takes two numbers a,b (w = a + b t), got '{body}'")
            pieces = [Piece(0.0, horizon, PolynomialFn.affine(coeffs[0], coeffs[1]))]
        elif kind == "override":
            t, v = _parse_override(body)
            overrides[t] = v
        else:
            raise ConfigError(f"Unknown signal form '{kind}'")
    if pieces is None:
        raise ConfigError(f"Signal '{text}' has no base form (const, steps or affine)")
    signal = Signal.create(pieces, value_set, overrides)
    logger.debug("Parsed signal '%s' as %s", text, signal.regularity_tag.label)
    return signal
