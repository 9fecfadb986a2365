"""Numerical toolkit for decay+drift quantum Markov semigroups and Zeno-type limits."""
from .artifacts import __version__
from .config import DEFAULT_SEED, TOL, Tolerances

__all__ = ["__version__", "DEFAULT_SEED", "TOL", "Tolerances"]
