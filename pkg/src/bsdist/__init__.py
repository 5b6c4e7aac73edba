"""Birnbaum-Saunders distributions: densities, estimation and simulation."""

from .core import BsParams
from .numerics import ConvergenceError, DomainError, NonexistenceError

__version__ = "0.1.0"

__all__ = ["BsParams", "ConvergenceError", "DomainError", "NonexistenceError", "__version__"]
