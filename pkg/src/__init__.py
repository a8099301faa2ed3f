from src.core.errors import HybridSimError
from src.core.hybrid_time import HybridArc, htd_validate
from src.core.system import HybridSystem
from src.scenarios.registry import build_scenario
from src.signals.signal import Signal
from src.signals.signal_parser import parse_signal
from src.simulation.classification import classify_termination
from src.simulation.report import SimConfig
from src.simulation.simulator import solve
from src.simulation.validation import validate_arc

__version__ = "0.1.0"
