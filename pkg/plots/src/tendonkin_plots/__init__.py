"""Offline figure rendering for the model-comparison plotdata CSVs.

Each figure type is a standalone batch script taking <input.csv>
<output-path>; everything is driven by the documented CSV schema, not by
the library that produced it.
"""

from .schema import PlotData, SchemaError, read_plotdata

__all__ = ["PlotData", "SchemaError", "read_plotdata"]
