"""Multi-agent ergodic exploration of Gaussian-mixture reference fields."""

from ._backend import BACKEND
from .grid import GridSpec, Point, ScalarField

__version__ = "0.1.0"

__all__ = ["BACKEND", "GridSpec", "Point", "ScalarField", "__version__"]
