"""Shared figure style and output-path handling for the batch scripts."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

DPI = 120
BAND_Z = 1.96  # 95% band half-width in sigmas
AXES = ("x", "y", "z")


def apply_style() -> None:
    plt.rcParams.update(
        {
            "figure.figsize": (8.0, 3.0),
            "axes.grid": True,
            "grid.alpha": 0.3,
            "font.size": 9,
            "legend.fontsize": 8,
            "svg.hashsalt": "tendonkin-plots",
        }
    )


def axis_paths(out_path: str, stem: str) -> dict:
    """One output file per axis.

    If out_path is a directory (existing or spelled with a trailing
    separator) files are <out_path>/<stem>_<axis>.png; otherwise out_path
    is used as a prefix: <out_path>_<axis>.png.
    """
    if out_path.endswith(os.sep) or os.path.isdir(out_path):
        os.makedirs(out_path, exist_ok=True)
        return {a: os.path.join(out_path, f"{stem}_{a}.png") for a in AXES}
    parent = os.path.dirname(out_path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    return {a: f"{out_path}_{a}.png" for a in AXES}
