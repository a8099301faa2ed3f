"""Shared fixtures: the built-in scenarios and their reference input signals."""
import numpy as np
import pytest

from src.scenarios.registry import build_scenario
from src.signals.signal import Signal
from src.signals.signal_parser import parse_signal
from src.simulation.report import SimConfig


@pytest.fixture
def ex1():
    return build_scenario("ex1")


@pytest.fixture
def ex2():
    return build_scenario("ex2c", c=1.0)


@pytest.fixture
def ex3():
    return build_scenario("ex3")


@pytest.fixture
def remark2():
    return build_scenario("remark2")


@pytest.fixture
def riccati():
    return build_scenario("riccati")


@pytest.fixture
def split_system():
    return build_scenario("split")


@pytest.fixture
def w_plus(ex1):
    return Signal.constant([0.2], ex1.input_set)


@pytest.fixture
def ex2_witness(ex2):
    """0.2 on (0, inf) with w(0) = -0.2"""
    return parse_signal("ex2-witness", ex2.input_set)


@pytest.fixture
def remark2_signal(remark2):
    return parse_signal("remark2", remark2.input_set)


@pytest.fixture
def cfg():
    return SimConfig(t_max=20.0)


@pytest.fixture
def rng():
    return np.random.default_rng(2024)
