"""Trajectory CSV schema, atomic writing, reading and comparison."""

from __future__ import annotations

import csv
import io
import os
import tempfile

import numpy as np

from .errors import GridMismatchError

COLUMNS = [
    "t", "omega", "H", "L", "C", "coherence",
    "beta", "gamma_re", "gamma_im", "n", "k_down", "k_up",
    "H_attr", "C_attr", "L_attr", "solver", "g",
]
_FLOAT_COLUMNS = [c for c in COLUMNS if c not in ("solver",)]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    return repr(float(value))


def atomic_write_text(path: str, text: str):
    """Write via a temp file in the same directory plus rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_trajectory_csv(path: str, rows: list[dict]):
    """Write rows in the fixed column schema; absent entries stay empty."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in rows:
        writer.writerow([_fmt(row.get(col)) for col in COLUMNS])
    atomic_write_text(path, buf.getvalue())


def read_trajectory_csv(path: str) -> dict:
    """Columns as arrays; empty numeric cells become NaN."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        raw = {col: [] for col in header}
        for line in reader:
            for col, cell in zip(header, line):
                raw[col].append(cell)
    out = {}
    for col, cells in raw.items():
        if col == "solver":
            out[col] = cells
        else:
            out[col] = np.array(
                [float(c) if c != "" else np.nan for c in cells]
            )
    return out


def compare_trajectories(paths: list[str], columns=("H",)) -> dict:
    """Max/mean relative deviation of selected columns between file pairs.

    Files must share the time horizon; differing grids are resampled by
    linear interpolation onto the first file's grid.  Deviations are
    normalized by the larger max-abs of the two series.
    """
    if len(paths) < 2:
        raise ValueError("need at least two files to compare")
    data = [read_trajectory_csv(p) for p in paths]
    t0 = data[0]["t"]
    for p, d in zip(paths[1:], data[1:]):
        if abs(d["t"][0] - t0[0]) > 1e-9 or abs(d["t"][-1] - t0[-1]) > 1e-9:
            raise GridMismatchError(
                f"horizon of {p} ([{d['t'][0]}, {d['t'][-1]}]) does not match "
                f"{paths[0]} ([{t0[0]}, {t0[-1]}])"
            )
    report = {"files": list(paths), "columns": list(columns), "pairs": []}
    for i in range(len(paths)):
        for j in range(i + 1, len(paths)):
            entry = {"a": paths[i], "b": paths[j], "deviations": {}}
            for col in columns:
                a = np.interp(t0, data[i]["t"], data[i][col])
                b = np.interp(t0, data[j]["t"], data[j][col])
                mask = ~(np.isnan(a) | np.isnan(b))
                if not mask.any():
                    entry["deviations"][col] = {"max": None, "mean": None}
                    continue
                scale = max(
                    float(np.max(np.abs(a[mask]))),
                    float(np.max(np.abs(b[mask]))),
                    1e-300,
                )
                diff = np.abs(a[mask] - b[mask]) / scale
                entry["deviations"][col] = {
                    "max": float(np.max(diff)),
                    "mean": float(np.mean(diff)),
                }
            report["pairs"].append(entry)
    return report
