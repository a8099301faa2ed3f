"""Report and arc files: deterministic JSON and CSV, with retried writes."""
import csv
import io
import json
import logging
import time
from pathlib import Path

import numpy as np

from src.core.errors import InvalidDomainError, IoFailure
from src.core.hybrid_time import ArcSegment, HybridArc, htd_validate
from src.utils.formatting import format_float, json_float, jsonable, pretty_json

logger = logging.getLogger(__name__)

REPORT_SCHEMA = "hybrid-sim/report/1"
ARC_SCHEMA = "hybrid-sim/arc/1"
FORMATS = ("csv", "json")


def execute_with_retry(command_func, *args, max_retries=3, retry_delay=0.2, **kwargs):
    """
    Run a filesystem command, retrying on OSError

    Raises:
        IoFailure: every attempt failed
    """
    last_error = None
    for attempt in range(max_retries):
        try:
            return command_func(*args, **kwargs)
        except OSError as e:
            last_error = e
            logger.warning("File operation failed (attempt %d/%d): %s", attempt + 1, max_retries, e)
            if attempt < max_retries - 1:
                time.sleep(retry_delay)
    raise IoFailure(f"File operation failed after {max_retries} attempts: {last_error}")


def _write_text(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def write_text(path, text):
    return execute_with_retry(_write_text, path, text)


def arc_to_dict(arc):
    return jsonable({
        "schema": ARC_SCHEMA,
        "state_dim": arc.state_dim,
        "domain": arc.domain.to_dict(),
        "segments": [
            {
                "j": seg.j,
                "times": seg.times,
                "states": seg.states,
                "derivatives": seg.derivatives,
            }
            for seg in arc.segments
        ],
    })


def arc_from_dict(data):
    """
    Rebuild a HybridArc from its JSON form

    Raises:
        InvalidDomainError: the stored domain is not a hybrid time domain
    """
    if data.get("schema") != ARC_SCHEMA:
        raise InvalidDomainError(f"Unsupported arc schema {data.get('schema')!r}")
    state_dim = int(data["state_dim"])
    segments = []
    for raw in data["segments"]:
        derivatives = raw.get("derivatives")
        segments.append(
            ArcSegment(
                int(raw["j"]),
                np.array([json_float(t) for t in raw["times"]]),
                np.array([[json_float(v) for v in row] for row in raw["states"]]).reshape(-1, state_dim),
                None if derivatives is None else np.array(derivatives, dtype=float).reshape(-1, state_dim),
            )
        )
    intervals = [
        (iv["j"], json_float(iv["t_start"]), json_float(iv["t_end"]), bool(iv["right_open"]))
        for iv in data["domain"]["intervals"]
    ]
    return HybridArc(htd_validate(intervals), segments, state_dim)


RIGHT_OPEN_MARKER = "# right_open"


def arc_csv_text(arc):
    """
    CSV with columns j, t, x0..x{n-1}; duplicate breakpoint rows are dropped

    A right-open last interval (finite escape) is written as a trailing
    RIGHT_OPEN_MARKER line.
    """
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["j", "t"] + [f"x{i}" for i in range(arc.state_dim)])
    for j, t, x in arc.rows(unique=True):
        writer.writerow([j, format_float(t)] + [format_float(v) for v in x])
    if arc.domain.last.right_open:
        buffer.write(RIGHT_OPEN_MARKER + "\n")
    return buffer.getvalue()


def arc_from_csv_text(text):
    """
    Rebuild a piecewise-linear HybridArc from its CSV dump

    Raises:
        InvalidDomainError: malformed rows or an invalid domain
    """
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if not header or header[:2] != ["j", "t"]:
        raise InvalidDomainError("Arc CSV must start with the columns j,t")
    state_dim = len(header) - 2
    rows = {}
    right_open = False
    for line, row in enumerate(reader, start=2):
        if not row:
            continue
        if row[0].startswith("#"):
            right_open = right_open or row[0].strip() == RIGHT_OPEN_MARKER
            continue
        if len(row) != state_dim + 2:
            raise InvalidDomainError(f"Row {line} has {len(row)} columns, expected {state_dim + 2}")
        rows.setdefault(int(row[0]), []).append((float(row[1]), [float(v) for v in row[2:]]))
    if not rows:
        raise InvalidDomainError("Arc CSV has no rows")
    segments = [
        ArcSegment(j, np.array([t for t, _ in samples]), np.array([x for _, x in samples]).reshape(-1, state_dim))
        for j, samples in sorted(rows.items())
    ]
    return HybridArc.from_segments(segments, state_dim, right_open_last=right_open)


def report_to_dict(report, system=None, signal=None, classification=None):
    data = {
        "schema": REPORT_SCHEMA,
        "mode": report.mode,
        "termination": report.termination.to_dict(),
        "arc": arc_to_dict(report.arc),
        "diagnostics": report.diagnostics,
        "config": report.config.to_dict(),
    }
    if report.branch:
        data["branch"] = list(report.branch)
    if classification is not None:
        data["classification"] = classification
    if system is not None:
        data["system"] = system.to_dict()
    if signal is not None:
        data["signal"] = signal.to_dict()
    return jsonable(data)


def export_report(report, out_dir, fmt="json", stem="report", **context):
    """
    Write a report as JSON or its arc as CSV

    Args:
        context: system, signal and classification echoed into the JSON

    Returns:
        Path of the written file

    Raises:
        IoFailure
    """
    if fmt not in FORMATS:
        raise ValueError(f"Unknown export format '{fmt}'")
    path = Path(out_dir) / f"{stem}.{fmt}"
    text = arc_csv_text(report.arc) if fmt == "csv" else pretty_json(report_to_dict(report, **context)) + "\n"
    write_text(path, text)
    logger.info("Wrote %s", path)
    return path


def _read_text(path):
    return Path(path).read_text(encoding="utf-8")


def load_arc_json(path):
    """Arc from an arc or report JSON file"""
    try:
        data = json.loads(execute_with_retry(_read_text, path, max_retries=1))
    except json.JSONDecodeError as e:
        raise InvalidDomainError(f"{path} is not valid JSON: {e}")
    if data.get("schema") == REPORT_SCHEMA:
        data = data["arc"]
    return arc_from_dict(data)


def load_arc_csv(path):
    return arc_from_csv_text(execute_with_retry(_read_text, path, max_retries=1))


def load_arc(path):
    """Dispatch on the file suffix"""
    if Path(path).suffix.lower() == ".csv":
        return load_arc_csv(path)
    return load_arc_json(path)
