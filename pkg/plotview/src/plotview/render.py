"""Offline rendering of experiment CSV output.

Strictly a view: every plotted number is read from the input files, nothing
is recomputed.  Three figure kinds are supported:

* ``loss_curves``   -- one labeled curve per optimizer trace CSV
                       (columns iter, loss, ...)
* ``tau_ablation``  -- barycenter drift against the relaxation strength
                       (columns tau, w2_dist, ...)
* ``contours``      -- panels of 2-D density grids (columns x, y, density);
                       each input group is overlaid in one panel

``render`` returns the exact arrays it plotted so callers can verify the
figure against the source files.
"""

from __future__ import annotations

import csv
import glob as globlib
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

KINDS = ("loss_curves", "contours", "tau_ablation")


class PlotInputError(Exception):
    """Missing or malformed input data."""


@dataclass
class PlotSpec:
    """What to draw: input paths (groups for contours), kind, output path."""

    kind: str
    inputs: list
    output: str
    title: str = ""
    logy: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise PlotInputError(f"unknown plot kind {self.kind!r}")
        if not self.inputs:
            raise PlotInputError("no inputs given")


def _expand_group(group: str) -> list[Path]:
    paths: list[Path] = []
    for part in group.split(","):
        matches = sorted(globlib.glob(part))
        if matches:
            paths.extend(Path(m) for m in matches)
        else:
            paths.append(Path(part))
    for p in paths:
        if not p.exists():
            raise PlotInputError(f"input file not found: {p}")
    return paths


def _read_columns(path: Path, required: tuple) -> dict:
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise PlotInputError(f"{path}: empty CSV")
    missing = [c for c in required if c not in rows[0]]
    if missing:
        raise PlotInputError(f"{path}: missing columns {missing}")
    return {c: np.array([float(r[c]) for r in rows]) for c in required}


def _render_loss_curves(spec: PlotSpec, extracted: dict) -> None:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for group in spec.inputs:
        for path in _expand_group(group):
            cols = _read_columns(path, ("iter", "loss"))
            label = path.stem.replace(".trace", "")
            extracted[label] = {"iter": cols["iter"], "loss": cols["loss"]}
            ax.plot(cols["iter"], cols["loss"], label=label)
    ax.set_xlabel("iteration")
    ax.set_ylabel("loss")
    if spec.logy:
        ax.set_yscale("log")
    ax.legend(fontsize=8)
    ax.set_title(spec.title or "loss per iteration")
    fig.tight_layout()
    fig.savefig(spec.output, dpi=120)
    plt.close(fig)


def _render_tau_ablation(spec: PlotSpec, extracted: dict) -> None:
    fig, ax = plt.subplots(figsize=(6.5, 4.2))
    for group in spec.inputs:
        for path in _expand_group(group):
            cols = _read_columns(path, ("tau", "w2_dist"))
            extracted[path.stem] = {"tau": cols["tau"], "w2_dist": cols["w2_dist"]}
            ax.plot(cols["tau"], cols["w2_dist"], marker="o", label=path.stem)
    ax.set_xscale("log")
    ax.set_xlabel("tau")
    ax.set_ylabel("distance to plain barycenter")
    ax.legend(fontsize=8)
    ax.set_title(spec.title or "barycenter drift vs relaxation strength")
    fig.tight_layout()
    fig.savefig(spec.output, dpi=120)
    plt.close(fig)


def _grid_shape(x: np.ndarray, y: np.ndarray) -> tuple[int, int]:
    nx = np.unique(x).size
    ny = np.unique(y).size
    if nx * ny != x.size:
        raise PlotInputError("contour grid is not a regular lattice")
    return ny, nx


def _render_contours(spec: PlotSpec, extracted: dict) -> None:
    n = len(spec.inputs)
    fig, axes = plt.subplots(1, n, figsize=(3.4 * n, 3.4), squeeze=False)
    for ax, group in zip(axes[0], spec.inputs):
        for path in _expand_group(group):
            cols = _read_columns(path, ("x", "y", "density"))
            extracted[path.stem] = cols
            shape = _grid_shape(cols["x"], cols["y"])
            xx = cols["x"].reshape(shape)
            yy = cols["y"].reshape(shape)
            dd = cols["density"].reshape(shape)
            ax.contour(xx, yy, dd, levels=6, linewidths=0.9)
        ax.set_aspect("equal")
        ax.set_title(group if len(group) < 40 else "...", fontsize=8)
    if spec.title:
        fig.suptitle(spec.title)
    fig.tight_layout()
    fig.savefig(spec.output, dpi=120)
    plt.close(fig)


def render(spec: PlotSpec) -> dict:
    """Draw the figure and return {label: {column: array}} of plotted data."""
    extracted: dict = {}
    if spec.kind == "loss_curves":
        _render_loss_curves(spec, extracted)
    elif spec.kind == "tau_ablation":
        _render_tau_ablation(spec, extracted)
    else:
        _render_contours(spec, extracted)
    if not extracted:
        raise PlotInputError("inputs matched no data")
    return extracted
