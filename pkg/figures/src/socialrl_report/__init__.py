"""Batch figure rendering for simulation metric CSVs."""

__version__ = "0.1.0"

from .figures import FigureSpec, SchemaError, render  # noqa: F401
