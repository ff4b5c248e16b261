"""Batch figure rendering for simulator run outputs (CSV + JSON files)."""

from .render import PANELS, AlignmentError, PlotSpec, RunData, SchemaError, build_figure, render

__version__ = "0.1.0"

__all__ = ["PlotSpec", "RunData", "render", "build_figure", "PANELS",
           "SchemaError", "AlignmentError", "__version__"]
