"""Figure rendering for link-simulation CSV results."""

from otfs_plots.figures import KINDS, SCHEMAS, FigureSpec, SchemaError, render

__all__ = ["FigureSpec", "SchemaError", "render", "KINDS", "SCHEMAS"]
