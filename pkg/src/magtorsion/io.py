"""CSV and JSON ingestion/emission for the CLI.

All writers go through a write-to-temp-then-rename path so a failed run
never leaves a partial output file behind. Floats are written with 17
significant digits, which round-trips IEEE doubles exactly.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from .energetics import EnergyTrace
from .errors import DataError
from .sweep import DriveSchedule, SweepResult
from .sysid import TimeSeries

FLOAT_FMT = "%.17g"
UNIFORMITY_REL_TOL = 1e-6


def _atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _fmt(x: float) -> str:
    return FLOAT_FMT % x


def load_timeseries_csv(path, unit: str = "rad") -> TimeSeries:
    """Read a `t,value` CSV into a TimeSeries.

    Lines starting with '#' are comments. Timestamps must be strictly
    increasing and uniform to within a relative jitter of 1e-6; the spacing
    is taken as the median difference.
    """
    path = Path(path)
    t_vals: list[float] = []
    y_vals: list[float] = []
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    rows = [(n, line) for n, line in enumerate(raw.splitlines(), start=1)
            if line.strip() and not line.lstrip().startswith("#")]
    if not rows:
        raise DataError(f"{path}: no data rows")
    header_n, header = rows[0]
    cols = [c.strip() for c in header.split(",")]
    if cols[:2] != ["t", "value"]:
        raise DataError(f"{path}:{header_n}: expected header 't,value', got {header!r}")
    for n, line in rows[1:]:
        parts = line.split(",")
        if len(parts) < 2:
            raise DataError(f"{path}:{n}: expected 2 columns, got {len(parts)}")
        try:
            t_vals.append(float(parts[0]))
        except ValueError as exc:
            raise DataError(f"{path}:{n}: column 1: {exc}") from exc
        try:
            y_vals.append(float(parts[1]))
        except ValueError as exc:
            raise DataError(f"{path}:{n}: column 2: {exc}") from exc
    if len(t_vals) < 2:
        raise DataError(f"{path}: need at least 2 data rows")
    t = np.asarray(t_vals)
    steps = np.diff(t)
    if np.any(steps <= 0.0):
        k = int(np.argmax(steps <= 0.0))
        raise DataError(f"{path}: timestamps not strictly increasing near row {k + 2}")
    dt = float(np.median(steps))
    if np.max(np.abs(steps - dt)) > UNIFORMITY_REL_TOL * dt:
        raise DataError(
            f"{path}: non-uniform sampling (jitter exceeds {UNIFORMITY_REL_TOL:g} of dt)"
        )
    return TimeSeries(float(t[0]), dt, np.asarray(y_vals), unit)


def write_timeseries_csv(path, series: TimeSeries, comment: str = "") -> None:
    lines = []
    if comment:
        lines.append(f"# {comment}")
    lines.append(f"# columns: t (s), value ({series.unit})")
    lines.append("t,value")
    for t, v in zip(series.times, series.values):
        lines.append(f"{_fmt(t)},{_fmt(v)}")
    _atomic_write_text(Path(path), "\n".join(lines) + "\n")


def load_drive_schedule_csv(path, direction: str | None = None) -> DriveSchedule:
    """Read a `f_hz,u_amp_v` CSV; the direction is inferred when not given."""
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    rows = [line for line in raw.splitlines()
            if line.strip() and not line.lstrip().startswith("#")]
    if not rows or [c.strip() for c in rows[0].split(",")][:2] != ["f_hz", "u_amp_v"]:
        raise DataError(f"{path}: expected header 'f_hz,u_amp_v'")
    pts = []
    for n, line in enumerate(rows[1:], start=2):
        parts = line.split(",")
        if len(parts) < 2:
            raise DataError(f"{path}:{n}: expected 2 columns")
        try:
            pts.append((float(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise DataError(f"{path}:{n}: {exc}") from exc
    if len(pts) == 0:
        raise DataError(f"{path}: no schedule rows")
    if direction is None:
        direction = "forward" if len(pts) < 2 or pts[1][0] > pts[0][0] else "backward"
    return DriveSchedule(tuple(pts), direction)


def write_sweep_csv(path, result: SweepResult) -> None:
    lines = [
        f"# sweep direction={result.direction} label={result.label}",
        "# columns: f_hz (Hz), theta_amp_rad (rad), i_amp_a (A), phase_rad (rad), converged (0/1)",
        "f_hz,theta_amp_rad,i_amp_a,phase_rad,converged",
    ]
    for k in range(len(result)):
        lines.append(
            f"{_fmt(result.f_hz[k])},{_fmt(result.theta_amp[k])},"
            f"{_fmt(result.i_amp[k])},{_fmt(result.theta_phase[k])},"
            f"{int(result.converged[k])}"
        )
    _atomic_write_text(Path(path), "\n".join(lines) + "\n")


def write_energy_csv(path, trace: EnergyTrace, comment: str = "") -> None:
    lines = []
    if comment:
        lines.append(f"# {comment}")
    lines.append("# columns: t (s), e_mech (J), e_dis (J)")
    lines.append("t,e_mech,e_dis")
    for t, em, ed in zip(trace.times, trace.e_mech, trace.e_dis):
        lines.append(f"{_fmt(t)},{_fmt(em)},{_fmt(ed)}")
    _atomic_write_text(Path(path), "\n".join(lines) + "\n")


def write_table_csv(path, header_comment: str, columns: dict[str, np.ndarray]) -> None:
    """Generic delimited table with a '#' schema comment line."""
    names = list(columns)
    n = len(next(iter(columns.values())))
    lines = [f"# {header_comment}", ",".join(names)]
    for k in range(n):
        lines.append(",".join(_fmt(float(columns[name][k])) for name in names))
    _atomic_write_text(Path(path), "\n".join(lines) + "\n")


def _jsonify(obj):
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def write_json_report(path, payload: dict) -> None:
    _atomic_write_text(Path(path),
                       json.dumps(payload, indent=2, sort_keys=True,
                                  default=_jsonify) + "\n")
