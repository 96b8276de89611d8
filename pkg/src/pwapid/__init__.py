"""Constrained PI/PID controllers derived from explicit model predictive control."""
from .config import TOL, Tolerances
from .errors import PwaPidError

__version__ = "0.1.0"
__all__ = ["TOL", "Tolerances", "PwaPidError", "__version__"]
