"""Figure rendering for name-sim trajectory CSV output."""

__version__ = "0.1.0"

from .figures import FIGURES, PANELS, FigureRequest, RenderError, render
