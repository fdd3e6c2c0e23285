"""Model-comparison figure: reference, analytical and every model's mean
with a shaded 95% confidence band, one figure per axis.

Usage: tendonkin-plot-comparison <input.csv> <output-path>
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


def render_comparison(csv_path: str, out_path: str) -> list:
    """Render one comparison figure per axis; returns the written paths."""
    data = read_plotdata(csv_path)
    apply_style()
    paths = axis_paths(out_path, "comparison")
    written = []
    for j, ax_name in enumerate(AXES):
        fig, ax = plt.subplots()
        ax.plot(data.t, data.reference[:, j], "k-", lw=1.5, label="reference")
        ax.plot(data.t, data.analytical[:, j], "--", color="tab:gray",
                lw=1.0, label="analytical")
        for m in data.models:
            mu = data.means[m][:, j]
            half = BAND_Z * data.sigmas[m][:, j]
            (line,) = ax.plot(data.t, mu, lw=1.0, label=m)
            ax.fill_between(data.t, mu - half, mu + half,
                            color=line.get_color(), alpha=0.2, lw=0)
        ax.set_xlabel("t (s)")
        ax.set_ylabel(f"{ax_name} (m)")
        ax.legend(ncol=3, loc="upper right")
        fig.tight_layout()
        fig.savefig(paths[ax_name], dpi=DPI)
        plt.close(fig)
        written.append(paths[ax_name])
    return written


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Render per-axis model-comparison figures with 95% bands"
    )
    parser.add_argument("input_csv")
    parser.add_argument("output_path")
    args = parser.parse_args(argv)
    try:
        written = render_comparison(args.input_csv, args.output_path)
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
