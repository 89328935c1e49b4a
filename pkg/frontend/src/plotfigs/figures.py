"""Render trajectory CSVs into the five standard figure layouts.

Inputs are the scenario CSVs written by name-sim (fixed column schema); this
module never computes physics, it only draws the columns.  Rendering is
deterministic: fixed style, no timestamps embedded in the output files.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

FIGURES = ("fig1", "fig2", "fig3", "fig4", "fig5")
PANELS = {"fig1": 2, "fig2": 3, "fig3": 1, "fig4": 3, "fig5": 1}

_REQUIRED = {
    "fig1": ("t", "H", "C"),
    "fig2": ("t", "H", "L", "C"),
    "fig3": ("t", "coherence"),
    "fig4": ("t", "H_attr", "C_attr", "k_down"),
    "fig5": ("t", "H"),
}


class RenderError(ValueError):
    pass


@dataclass(frozen=True)
class FigureRequest:
    figure: str
    inputs: list[str] = field(default_factory=list)
    output: str = "figure.png"
    format: str | None = None  # inferred from the output suffix when None

    def __post_init__(self):
        if self.figure not in FIGURES:
            raise RenderError(f"unknown figure {self.figure!r}; options: {FIGURES}")
        if not self.inputs:
            raise RenderError("no input CSV files given")
        fmt = self.format or os.path.splitext(self.output)[1].lstrip(".").lower()
        if fmt not in ("png", "svg"):
            raise RenderError(f"unsupported format {fmt!r} (png or svg)")
        object.__setattr__(self, "format", fmt)


def _read_csv(path: str) -> dict:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    cols = {}
    for i, name in enumerate(header):
        cells = [row[i] for row in rows]
        if name == "solver":
            cols[name] = cells
        else:
            cols[name] = np.array([float(c) if c else np.nan for c in cells])
    return cols


def _label(path: str, data: dict) -> str:
    solver = next((s for s in data.get("solver", []) if s), "")
    g = data.get("g")
    if solver in ("name", "exact", "adiabatic") and g is not None and len(g):
        g0 = g[0]
        if not np.isnan(g0):
            return f"{solver}, g={g0:g}"
    if solver:
        return solver
    return os.path.splitext(os.path.basename(path))[0]


def _check_columns(fig: str, path: str, data: dict):
    missing = [c for c in _REQUIRED[fig] if c not in data]
    if missing:
        raise RenderError(f"{path} lacks required columns {missing} for {fig}")


_STYLE = {
    "figure.dpi": 120,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.2,
    "svg.hashsalt": "plot-figs",  # deterministic element ids
}


def render(req: FigureRequest) -> tuple[str, int]:
    """Draw the requested figure; returns (output path, panel count)."""
    datasets = []
    for path in req.inputs:
        data = _read_csv(path)
        _check_columns(req.figure, path, data)
        datasets.append((path, data))

    n_panels = PANELS[req.figure]
    with plt.rc_context(_STYLE):
        if req.figure == "fig1":
            fig, axes = plt.subplots(1, 2, figsize=(8.0, 3.2))
            for path, d in datasets:
                axes[0].plot(d["t"], d["H"], label=_label(path, d))
                axes[1].plot(d["t"], d["C"], label=_label(path, d))
            axes[0].set_ylabel(r"$\langle H \rangle$")
            axes[1].set_ylabel(r"$\langle C \rangle$")
            for ax in axes:
                ax.set_xlabel("t")
            axes[0].legend(fontsize=7)
        elif req.figure == "fig2":
            fig, axes = plt.subplots(3, 1, figsize=(5.0, 7.5), sharex=True)
            for path, d in datasets:
                h = d["H_attr"] if _is_attractor(d) else d["H"]
                l_ = d["L_attr"] if _is_attractor(d) else d["L"]
                c = d["C_attr"] if _is_attractor(d) else d["C"]
                axes[0].plot(d["t"], h, label=_label(path, d))
                axes[1].plot(d["t"], l_, label=_label(path, d))
                axes[2].plot(d["t"], c, label=_label(path, d))
            for ax, name in zip(axes, (r"$\langle H \rangle$", r"$\langle L \rangle$",
                                       r"$\langle C \rangle$")):
                ax.set_ylabel(name)
            axes[2].set_xlabel("t")
            axes[0].legend(fontsize=7)
        elif req.figure == "fig3":
            fig, ax = plt.subplots(figsize=(5.0, 3.4))
            for path, d in datasets:
                ax.plot(d["t"], d["coherence"], label=_label(path, d))
            ax.set_xlabel("t")
            ax.set_ylabel("coherence")
            ax.legend(fontsize=7)
        elif req.figure == "fig4":
            fig, axes = plt.subplots(3, 1, figsize=(5.0, 7.5), sharex=True)
            for path, d in datasets:
                axes[0].plot(d["t"], d["H_attr"], label=_label(path, d))
                axes[1].plot(d["t"], d["C_attr"] - d["C_attr"][0],
                             label=_label(path, d))
                axes[2].plot(d["t"], d["k_down"], label=_label(path, d))
            axes[0].set_ylabel(r"$\langle H \rangle_{ia}$")
            axes[1].set_ylabel(r"$\Delta \langle C \rangle_{ia}$")
            axes[2].set_ylabel(r"$k_\downarrow$")
            axes[2].set_xlabel("t")
            axes[0].legend(fontsize=7)
        else:  # fig5
            fig, ax = plt.subplots(figsize=(5.4, 3.6))
            for path, d in datasets:
                ax.plot(d["t"], d["H"], label=_label(path, d))
            ax.set_xlabel("t")
            ax.set_ylabel(r"$\langle H \rangle$")
            ax.legend(fontsize=7)

        fig.tight_layout()
        metadata = {"Date": None} if req.format == "svg" else {}
        fig.savefig(req.output, format=req.format, metadata=metadata)
        plt.close(fig)
    return req.output, n_panels


def _is_attractor(data: dict) -> bool:
    solvers = data.get("solver", [])
    return bool(solvers) and solvers[0] == "attractor"
