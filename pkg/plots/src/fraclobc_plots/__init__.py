"""Figure rendering for fraclobc experiment artifacts (CSV/JSON only)."""

__version__ = "0.1.0"

from .figures import KINDS, FigureSpec, render, render_figure
from .io import MissingInput, SchemaMismatch

__all__ = ["KINDS", "FigureSpec", "render", "render_figure",
           "MissingInput", "SchemaMismatch"]
