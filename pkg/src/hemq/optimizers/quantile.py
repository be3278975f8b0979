"""Closed-form 1D energy-kernel quantizer."""

import logging
from typing import Callable

import numpy as np

from ..errors import OptimizerInputError
from ..measures import DiscreteMeasure

logger = logging.getLogger(__name__)


def quantile_levels(j: int) -> np.ndarray:
    """Levels ``(j - 1/2) / J`` for j = 1..J."""
    return (np.arange(1, j + 1) - 0.5) / j


def exact_quantile_1d(
    target_cdf_inverse: Callable[[np.ndarray], np.ndarray], j: int
) -> DiscreteMeasure:
    """Optimal uniform-weight energy quantizer of a 1D continuous law.

    Atom j sits at the quantile of order ``(j - 1/2) / J``.
    """
    if j < 1:
        raise OptimizerInputError(f"J must be >= 1, got {j}")
    points = np.ravel(np.asarray(target_cdf_inverse(quantile_levels(j)), dtype=float))
    if points.shape[0] != j or not np.all(np.isfinite(points)):
        raise OptimizerInputError("inverse CDF returned non-finite or misshaped values")
    if np.any(np.diff(points) < 0):
        raise OptimizerInputError("inverse CDF is not monotone")
    logger.debug(f"exact 1D quantizer with J={j}: {points}")
    return DiscreteMeasure(points=points.reshape(-1, 1), weights=np.full(j, 1.0 / j))
