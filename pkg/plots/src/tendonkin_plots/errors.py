"""Prediction-error figure: per-model error against the reference, one
figure per axis, with the same 95% band drawn around zero error.

Usage: tendonkin-plot-errors <input.csv> <output-path>
"""

from __future__ import annotations

import argparse
import sys

import matplotlib.pyplot as plt

from .schema import AXES, SchemaError, read_plotdata
from .style import BAND_Z, DPI, apply_style, axis_paths

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_SCHEMA = 2


def render_errors(csv_path: str, out_path: str) -> list:
    """Render one error figure per axis; returns the written paths."""
    data = read_plotdata(csv_path)
    apply_style()
    paths = axis_paths(out_path, "errors")
    written = []
    for j, ax_name in enumerate(AXES):
        fig, ax = plt.subplots()
        ax.axhline(0.0, color="k", lw=0.8)
        ax.plot(data.t, data.analytical[:, j] - data.reference[:, j],
                "--", color="tab:gray", lw=1.0, label="analytical")
        for m in data.models:
            err = data.means[m][:, j] - data.reference[:, j]
            half = BAND_Z * data.sigmas[m][:, j]
            (line,) = ax.plot(data.t, err, lw=1.0, label=m)
            ax.fill_between(data.t, err - half, err + half,
                            color=line.get_color(), alpha=0.2, lw=0)
        ax.set_xlabel("t (s)")
        ax.set_ylabel(f"{ax_name} error (m)")
        ax.legend(ncol=3, loc="upper right")
        fig.tight_layout()
        fig.savefig(paths[ax_name], dpi=DPI)
        plt.close(fig)
        written.append(paths[ax_name])
    return written


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Render per-axis prediction-error figures with 95% bands"
    )
    parser.add_argument("input_csv")
    parser.add_argument("output_path")
    args = parser.parse_args(argv)
    try:
        written = render_errors(args.input_csv, args.output_path)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for p in written:
        print(p)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
