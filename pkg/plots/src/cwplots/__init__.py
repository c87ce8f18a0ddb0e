"""Figure rendering for the experiment runner's CSV outputs.

This package is deliberately decoupled from the chain library: every
renderer works from the published CSV column names alone.  Each render
writes both a PNG and an SVG next to the requested output path.
"""

__version__ = "0.1.0"

from .render import KINDS, REQUIRED, PlotJob, SchemaError, render

__all__ = ["KINDS", "REQUIRED", "PlotJob", "SchemaError", "render", "__version__"]
