"""Pseudo-spectral Hall-MHD solver with Littlewood-Paley/Besov diagnostics."""

from .field_core import (
    Grid,
    GridMismatchError,
    ScalarField,
    ShapeError,
    SpectralField,
    ZeroModeError,
)
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Grid",
    "GridMismatchError",
    "ScalarField",
    "ShapeError",
    "SpectralField",
    "ZeroModeError",
]
