import json

import numpy as np
import pytest

from src.core.errors import InvalidDomainError, IoFailure
from src.core.hybrid_time import HybridTimePoint, arc_eval
from src.signals.signal import Signal
from src.simulation.report import SimConfig
from src.simulation.simulator import solve
from src.utils.export import (
    RIGHT_OPEN_MARKER,
    arc_csv_text,
    arc_from_csv_text,
    arc_from_dict,
    arc_to_dict,
    execute_with_retry,
    export_report,
    load_arc,
)
from src.utils.formatting import format_float, parse_float


@pytest.fixture
def ex1_report(ex1, w_plus):
    return solve(ex1, [0.5], w_plus, SimConfig(t_max=4.0))


def test_json_arc_keeps_domain_and_samples(ex1_report):
    arc = ex1_report.arc
    loaded = arc_from_dict(json.loads(json.dumps(arc_to_dict(arc))))
    assert loaded.jump_times == arc.jump_times
    assert loaded.domain.sup() == arc.domain.sup()
    point = HybridTimePoint(arc.jump_times[0] + 0.3, 1)
    assert arc_eval(loaded, point) == pytest.approx(arc_eval(arc, point), abs=1e-12)


def test_csv_arc_keeps_samples(ex1_report, tmp_path):
    path = export_report(ex1_report, tmp_path, "csv", "arc")
    loaded = load_arc(path)
    assert loaded.jump_times == ex1_report.arc.jump_times
    rows = list(ex1_report.arc.rows())
    assert [(j, t) for j, t, _ in loaded.rows()] == [(j, t) for j, t, _ in rows]


def test_trivial_arc_is_one_row(ex2, ex2_witness):
    report = solve(ex2, [1.0], ex2_witness, SimConfig())
    lines = arc_csv_text(report.arc).strip().splitlines()
    assert lines == ["j,t,x0", "0,0,1"]
    assert arc_from_csv_text("\n".join(lines)).domain.sup() == (0.0, 0)


def test_dead_state_report_names_the_cause(remark2, remark2_signal, tmp_path):
    report = solve(remark2, [1.0], remark2_signal, SimConfig(priority="FlowPriority"))
    path = export_report(report, tmp_path, "json", system=remark2, signal=remark2_signal)
    data = json.loads(path.read_text())
    assert data["termination"]["cause"] == "InputDiscontinuity"
    assert data["termination"]["jump_possible"] is False
    assert data["termination"]["at"] == {"t": 1.0, "j": 0}
    assert load_arc(path).domain.sup() == (1.0, 0)


def test_csv_arc_keeps_the_right_open_end(riccati, tmp_path):
    report = solve(riccati, [1.0], Signal.constant([0.0], riccati.input_set), SimConfig(t_max=20.0))
    text = arc_csv_text(report.arc)
    assert text.endswith(RIGHT_OPEN_MARKER + "\n")
    assert arc_from_csv_text(text).domain.last.right_open
    loaded = load_arc(export_report(report, tmp_path, "csv", "escape"))
    assert loaded.domain.last.right_open
    assert loaded.domain.sup() == report.arc.domain.sup()


@pytest.mark.parametrize("text", ["t,j,x0\n0,0,1\n", "j,t,x0\n", "j,t,x0\n0,0\n"])
def test_malformed_csv(text):
    with pytest.raises(InvalidDomainError):
        arc_from_csv_text(text)


def test_unknown_arc_schema():
    with pytest.raises(InvalidDomainError):
        arc_from_dict({"schema": "something-else"})


def test_retry_gives_up_with_io_failure():
    calls = []

    def always_fails():
        calls.append(1)
        raise OSError("disk full")

    with pytest.raises(IoFailure):
        execute_with_retry(always_fails, max_retries=3, retry_delay=0.0)
    assert len(calls) == 3


def test_float_text_is_bit_exact(rng):
    for value in rng.normal(scale=1e3, size=50):
        assert parse_float(format_float(value)) == value
    assert format_float(np.inf) == "inf"
