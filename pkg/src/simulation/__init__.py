from src.simulation.classification import CLASSIFICATIONS, classify_termination
from src.simulation.integrator import flow_segment
from src.simulation.report import FlowExit, SimConfig, SolutionReport, Termination
from src.simulation.simulator import solve
from src.simulation.validation import ArcValidation, Violation, validate_arc
