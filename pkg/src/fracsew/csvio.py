"""CSV output with lossless float round-trips and comment metadata.

All files share one shape: `# key=value` comment lines, then a header row,
then data rows.  Floats are written with 17 significant digits so reading
them back reproduces the exact binary values; writers emit LF newlines and
fixed formatting so reruns are byte-identical.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .fbm import FbmPath
from .fsde import ProbeReport
from .local_time import CumulativeCurve, LocalTimeCurve
from .sewing import RateFitResult

__all__ = [
    "format_value",
    "parse_scalar",
    "write_table",
    "TableData",
    "read_table",
    "write_path_csv",
    "read_path_csv",
    "write_rate_csv",
    "write_curve_csv",
    "read_curve_csv",
    "write_cumulative_csv",
    "write_probe_csv",
]


def format_value(v) -> str:
    """Render one cell or metadata value deterministically."""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_table(file_path: str, columns: list[str], rows,
                meta: dict | None = None) -> None:
    """Write comment metadata, a header row, and data rows."""
    lines = []
    for key, val in (meta or {}).items():
        lines.append(f"# {key}={format_value(val)}")
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(format_value(cell) for cell in row))
    with open(file_path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def parse_scalar(raw: str):
    """Best-effort typed parse of a metadata value (bool, int, float, str)."""
    low = raw.strip()
    if low == "true":
        return True
    if low == "false":
        return False
    try:
        return int(low)
    except ValueError:
        pass
    try:
        return float(low)
    except ValueError:
        return low


@dataclass(frozen=True)
class TableData:
    columns: tuple[str, ...]
    rows: np.ndarray
    meta: dict


def read_table(file_path: str) -> TableData:
    """Inverse of :func:`write_table` for numeric tables."""
    meta: dict = {}
    columns: tuple[str, ...] | None = None
    data: list[list[float]] = []
    with open(file_path, "r") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, _, raw = body.partition("=")
                    meta[key.strip()] = parse_scalar(raw)
                continue
            if columns is None:
                columns = tuple(part.strip() for part in line.split(","))
                continue
            data.append([float(cell) for cell in line.split(",")])
    if columns is None:
        raise ConfigurationError(f"{os.path.basename(file_path)} has no header row")
    rows = np.array(data, dtype=float) if data else np.empty((0, len(columns)))
    return TableData(columns=columns, rows=rows, meta=meta)


def write_path_csv(file_path: str, path: FbmPath,
                   meta: dict | None = None) -> None:
    base = {
        "hurst": path.hurst,
        "horizon": path.horizon,
        "grid_n": path.grid_n,
        "var0": path.var0,
        "method": path.method,
    }
    base.update(meta or {})
    if path.dim == 1:
        columns = ["t", "value"]
        rows = zip(path.times, path.values)
    else:
        columns = ["t"] + [f"value{k}" for k in range(path.dim)]
        rows = (
            (t, *vals) for t, vals in zip(path.times, path.values))
    write_table(file_path, columns, rows, base)


def read_path_csv(file_path: str):
    """Returns (times, values, meta); values 1-d for scalar paths."""
    table = read_table(file_path)
    times = table.rows[:, 0]
    values = table.rows[:, 1] if table.rows.shape[1] == 2 else table.rows[:, 1:]
    return times, values, table.meta


def write_rate_csv(file_path: str, fit: RateFitResult,
                   meta: dict | None = None) -> None:
    base = {
        "germ": fit.germ_name,
        "epsilon_hat": fit.epsilon_hat,
        "r2": fit.r_squared,
        "m": fit.m,
        "replicas": fit.replicas,
        "limit_estimate": fit.limit_estimate.value,
        "limit_stderr": fit.limit_estimate.stderr,
        "exact": fit.exact,
    }
    base.update(meta or {})
    rows = ((mesh, lm.value, lm.stderr)
            for mesh, lm in zip(fit.meshes, fit.lm_distances))
    write_table(file_path, ["mesh", "lm_distance", "stderr"], rows, base)


def write_curve_csv(file_path: str, curve: LocalTimeCurve,
                    meta: dict | None = None) -> None:
    base = {
        "estimator": curve.estimator,
        "hurst": curve.hurst,
        "partition_n": curve.partition_n,
        "horizon": curve.horizon,
        "normalized": curve.normalized,
    }
    base.update(meta or {})
    write_table(file_path, ["level", "value"],
                zip(curve.levels, curve.values), base)


def read_curve_csv(file_path: str):
    """Returns (levels, values, meta)."""
    table = read_table(file_path)
    return table.rows[:, 0], table.rows[:, 1], table.meta


def write_cumulative_csv(file_path: str, curve: CumulativeCurve,
                         meta: dict | None = None) -> None:
    base = {
        "estimator": curve.estimator,
        "level": curve.level,
        "hurst": curve.hurst,
    }
    base.update(meta or {})
    write_table(file_path, ["t", "value"],
                zip(curve.times, curve.values), base)


def write_probe_csv(file_path: str, report: ProbeReport,
                    meta: dict | None = None) -> None:
    base = {
        "coefficient": report.coefficient_name,
        "hurst": report.hurst,
        "delta": report.delta,
        "x0": report.x0,
        "replicas": report.replicas,
        "threshold_strong": report.thresholds.strong,
        "threshold_weak": report.thresholds.weak,
        "threshold_young": report.thresholds.young,
        "fitted_decay": report.fitted_decay,
        "extrapolated_final": report.extrapolated_final,
        "max_final_distance": report.max_final_distance,
        "plateau_free": ("none" if report.plateau_free is None
                         else report.plateau_free),
    }
    base.update(meta or {})
    rows = ((int(r[0]), int(r[1]), r[2], int(r[3]), r[4], r[5])
            for r in report.pair_table)
    write_table(file_path,
                ["replica", "level_a", "scale_a", "level_b", "scale_b",
                 "sup_distance"],
                rows, base)
