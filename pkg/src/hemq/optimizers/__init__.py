"""Quantization solvers."""

from .adam import Adam
from .evolution import differential_evolution, project_weights
from .flow import flow_steps, gradient_flow
from .quantile import exact_quantile_1d, quantile_levels
from .shemq import shemq
from .weights import best_support_subset, project_to_simplex, solve_weights

__all__ = [
    "Adam",
    "best_support_subset",
    "differential_evolution",
    "exact_quantile_1d",
    "flow_steps",
    "gradient_flow",
    "project_to_simplex",
    "project_weights",
    "quantile_levels",
    "shemq",
    "solve_weights",
]
