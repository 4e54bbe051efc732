"""Figure rendering for the ISAC experiment CSV outputs."""

from .render import FigureSpec, NoDataError, SchemaError, render

__version__ = "0.1.0"
