"""Discrete laboratory for the doubly nonlocal fractional (p, q)-Laplacian Dirichlet problem."""

from .core_grid import Grid, ProblemParams, WeightField, build_grid, norm_Lm, sample_weights
from .errors import FracPQError
from .problem import Problem, ProblemConfig, load_config, parse_config

__version__ = "0.1.0"

__all__ = [
    "FracPQError", "Grid", "Problem", "ProblemConfig", "ProblemParams", "WeightField",
    "build_grid", "load_config", "norm_Lm", "parse_config", "sample_weights",
]
