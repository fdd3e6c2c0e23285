"""Reading and validating the plotdata CSV schema.

A plotdata file has a header row and one row per time sample:

    t, ref_x, ref_y, ref_z, analytical_x, analytical_y, analytical_z,
    <model>_x, <model>_y, <model>_z,
    <model>_sigma_x, <model>_sigma_y, <model>_sigma_z, ...

for one or more model names. Any deviation raises SchemaError naming the
offending column or row.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

AXES = ("x", "y", "z")


class SchemaError(Exception):
    """The CSV does not conform to the plotdata schema."""


@dataclass
class PlotData:
    """Validated plotdata contents.

    means and sigmas map model name -> (N, 3) arrays; reference and
    analytical are (N, 3).
    """

    t: np.ndarray
    reference: np.ndarray
    analytical: np.ndarray
    means: dict
    sigmas: dict

    @property
    def models(self) -> list:
        return list(self.means)


def _column(table: dict, name: str) -> np.ndarray:
    if name not in table:
        raise SchemaError(f"missing column '{name}'")
    try:
        return np.array([float(v) for v in table[name]])
    except ValueError as exc:
        raise SchemaError(f"non-numeric value in column '{name}': {exc}") from exc


def read_plotdata(path: str) -> PlotData:
    """Load and validate a plotdata CSV; raises SchemaError on violation."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError("empty file: no header row") from None
        rows = list(reader)
    if len(header) != len(set(header)):
        raise SchemaError("duplicate column names in header")
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise SchemaError(
                f"row {i + 2} has {len(row)} fields, header has {len(header)}"
            )
    if not rows:
        raise SchemaError("no data rows")
    table = {name: [row[j] for row in rows] for j, name in enumerate(header)}

    t = _column(table, "t")
    reference = np.column_stack([_column(table, f"ref_{a}") for a in AXES])
    analytical = np.column_stack(
        [_column(table, f"analytical_{a}") for a in AXES]
    )

    fixed = {"t"} | {f"ref_{a}" for a in AXES} | {f"analytical_{a}" for a in AXES}
    model_names = []
    for name in header:
        if name in fixed:
            continue
        if name.endswith("_x") and not name.endswith("_sigma_x"):
            model_names.append(name[:-2])
    if not model_names:
        raise SchemaError("no model columns found")

    means, sigmas = {}, {}
    for m in model_names:
        means[m] = np.column_stack([_column(table, f"{m}_{a}") for a in AXES])
        sig = np.column_stack([_column(table, f"{m}_sigma_{a}") for a in AXES])
        for j, a in enumerate(AXES):
            if np.any(sig[:, j] < 0):
                raise SchemaError(f"negative values in column '{m}_sigma_{a}'")
        sigmas[m] = sig
    return PlotData(t=t, reference=reference, analytical=analytical,
                    means=means, sigmas=sigmas)
