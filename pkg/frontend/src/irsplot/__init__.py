"""Figure rendering for simulation harness CSV outputs."""

from .figure import (FigureSpec, SCHEME_LABELS, aggregate_series, load_rows,
                     render, watts_to_dbm)

__version__ = "0.1.0"

__all__ = ["FigureSpec", "SCHEME_LABELS", "aggregate_series", "load_rows",
           "render", "watts_to_dbm"]
