"""Figure rendering for optimal-control run directories."""

__version__ = "0.1.0"

from .render import ALL_KINDS, FigureRequest, RenderError, render

__all__ = ["ALL_KINDS", "FigureRequest", "RenderError", "render", "__version__"]
