"""On-disk formats: trajectory CSV, experiment report JSON, and initial-sample CSV.

Floats are written with 17 significant digits (CSV) or Python's shortest
round-trip repr (JSON), so every double survives a write/read cycle exactly.
Writes go through a temporary file in the target directory followed by a
rename, so a reader never sees a half-written document.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from . import __version__

TIMESERIES_HEADER = ("t", "sup_norm", "re_Q", "im_Q", "re_E", "im_E", "l2", "h1")
REPORT_KEYS = (
    "name",
    "inputs",
    "grid",
    "stepper",
    "metrics",
    "tolerances",
    "verdict",
    "artifacts",
    "version",
)
VERDICTS = ("pass", "fail", "informational")
OUTPUT_DIR_ENV = "NONLOCAL_NLS_OUTPUT_DIR"


class SchemaError(ValueError):
    """A document does not match its declared header or key schema."""


def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV, "nonlocal_nls_output"))


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def atomic_write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


# -- trajectory time series ------------------------------------------------------


def timeseries_text(traj) -> str:
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TIMESERIES_HEADER)
    for s in traj.samples:
        writer.writerow(
            [_fmt(v) for v in (s.time, s.sup_norm, s.Q.real, s.Q.imag, s.E.real, s.E.imag, s.l2, s.h1)]
        )
    buf.write(f"# termination={traj.termination.value}\n")
    buf.write(f"# final_time={_fmt(traj.final_time)}\n")
    buf.write(f"# steps={traj.steps}\n")
    buf.write(f"# charge_drift={_fmt(traj.charge_drift)}\n")
    est = traj.blowup_estimate
    if est is None:
        buf.write("# blowup_estimate=none\n")
    else:
        buf.write(f"# blowup_estimate={_fmt(est.time)}\n")
        buf.write(f"# blowup_uncertainty={_fmt(est.uncertainty)}\n")
    return buf.getvalue()


def write_timeseries(traj, path) -> Path:
    try:
        return atomic_write_text(path, timeseries_text(traj))
    except OSError as exc:
        raise OSError(f"cannot write time series to {path}: {exc}") from exc


def read_timeseries(path) -> tuple[np.ndarray, dict]:
    """Return the data block as an ``(n, 8)`` array and the trailer comments as a dict."""
    rows, trailer = [], {}
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    if not lines or tuple(lines[0].split(",")) != TIMESERIES_HEADER:
        raise SchemaError(f"{path}: header must be {','.join(TIMESERIES_HEADER)}")
    for lineno, line in enumerate(lines[1:], start=2):
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            trailer[key] = value
            continue
        fields = line.split(",")
        if len(fields) != len(TIMESERIES_HEADER):
            raise SchemaError(f"{path}:{lineno}: expected {len(TIMESERIES_HEADER)} columns, got {len(fields)}")
        try:
            rows.append([float(v) for v in fields])
        except ValueError as exc:
            raise SchemaError(f"{path}:{lineno}: {exc}") from None
    if "termination" not in trailer:
        raise SchemaError(f"{path}: missing '# termination=' trailer")
    data = np.array(rows, dtype=float).reshape(-1, len(TIMESERIES_HEADER))
    return data, trailer


# -- experiment reports -----------------------------------------------------------


def _encode(value):
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": float(value.real), "im": float(value.imag)}
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if math.isfinite(v) else None
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.ndarray):
        return [_encode(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [_encode(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _encode(v) for k, v in value.items()}
    if isinstance(value, Path):
        return str(value)
    return value


def _decode(value):
    if isinstance(value, dict):
        if set(value) == {"re", "im"}:
            return complex(value["re"], value["im"])
        return {k: _decode(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_decode(v) for v in value]
    return value


def report_document(rep) -> dict:
    return {
        "name": rep.name,
        "inputs": _encode(rep.inputs),
        "grid": _encode(rep.grid),
        "stepper": _encode(rep.stepper),
        "metrics": _encode(rep.metrics),
        "tolerances": _encode(rep.tolerances),
        "verdict": rep.verdict,
        "artifacts": [str(a) for a in rep.artifacts],
        "version": __version__,
    }


def report_text(rep) -> str:
    return json.dumps(report_document(rep), indent=2, allow_nan=False) + "\n"


def write_report(rep, path) -> Path:
    try:
        return atomic_write_text(path, report_text(rep))
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc


def validate_report_document(doc: dict) -> None:
    if not isinstance(doc, dict) or tuple(doc) != REPORT_KEYS:
        got = tuple(doc) if isinstance(doc, dict) else type(doc).__name__
        raise SchemaError(f"report keys must be {REPORT_KEYS} in that order, got {got}")
    if doc["verdict"] not in VERDICTS:
        raise SchemaError(f"unknown verdict {doc['verdict']!r}")
    for key in ("inputs", "grid", "stepper", "metrics", "tolerances"):
        if not isinstance(doc[key], dict):
            raise SchemaError(f"report field {key!r} must be an object")
    if not isinstance(doc["artifacts"], list):
        raise SchemaError("report field 'artifacts' must be a list")


def read_report(path):
    from .experiments import ExperimentReport

    with open(path) as fh:
        doc = json.load(fh)
    validate_report_document(doc)
    return ExperimentReport(
        name=doc["name"],
        inputs=_decode(doc["inputs"]),
        metrics=_decode(doc["metrics"]),
        verdict=doc["verdict"],
        artifacts=list(doc["artifacts"]),
        tolerances=_decode(doc["tolerances"]),
        grid=_decode(doc["grid"]),
        stepper=_decode(doc["stepper"]),
    )


# -- initial data from file ---------------------------------------------------------


SAMPLES_HEADER = ("x", "re_u", "im_u")


def write_samples(field, path) -> Path:
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SAMPLES_HEADER)
    for x, u in zip(field.grid.nodes, field.samples):
        writer.writerow([_fmt(x), _fmt(u.real), _fmt(u.imag)])
    return atomic_write_text(path, buf.getvalue())


def read_samples(path):
    """Load initial samples; the grid (N, L) is inferred from the node column."""
    from .grid import SpectralField, make_grid

    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != SAMPLES_HEADER:
            raise SchemaError(f"{path}: header must be {','.join(SAMPLES_HEADER)}")
        rows = [[float(v) for v in row] for row in reader if row and not row[0].startswith("#")]
    data = np.array(rows, dtype=float)
    if data.ndim != 2 or data.shape[1] != 3:
        raise SchemaError(f"{path}: expected three numeric columns")
    x = data[:, 0]
    n = len(x)
    half = -float(x[0])
    grid = make_grid(n, half)
    if not np.allclose(x, grid.nodes, rtol=0, atol=1e-9 * max(1.0, half)):
        raise SchemaError(f"{path}: nodes must be uniform on [-L, L) starting at -L")
    return SpectralField(grid, data[:, 1] + 1j * data[:, 2], 0.0)
