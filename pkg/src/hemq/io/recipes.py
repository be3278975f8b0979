"""Named targets used by the experiment configurations."""

import logging
from typing import Union

import numpy as np

from ..errors import ConfigError
from ..measures import AtomicTarget, DiscreteMeasure, GaussianComponent, GaussianMixtureTarget
from ..models.run_spec import Recipe

logger = logging.getLogger(__name__)


def mixture_grid_centers(rows: int = 3, cols: int = 4, spacing: float = 1.0) -> np.ndarray:
    """Centers of a ``rows x cols`` grid, row-major, origin at the first center."""
    return np.array(
        [[spacing * c, spacing * r] for r in range(rows) for c in range(cols)], dtype=float
    )


def mixture_grid_target(
    sigma: float = 0.15, rows: int = 3, cols: int = 4, spacing: float = 1.0
) -> GaussianMixtureTarget:
    """Equal-weight isotropic Gaussians on a grid."""
    centers = mixture_grid_centers(rows, cols, spacing)
    weight = 1.0 / centers.shape[0]
    return GaussianMixtureTarget(
        components=[
            GaussianComponent(mean=center.tolist(), sigma=sigma, weight=weight)
            for center in centers
        ]
    )


def standard_normal_target(dimension: int = 1) -> GaussianMixtureTarget:
    return GaussianMixtureTarget.normal(np.zeros(dimension), 1.0)


def signed_counterexample_target(eps: float = 0.001) -> AtomicTarget:
    """Atoms O, A, B (weight 1/3 - eps each) and C near O (weight 3 eps).

    Two-atom approximations of this target on its own support need weights
    outside [0, 1].
    """
    points = [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [-0.01, -0.01]]
    third = 1.0 / 3.0 - eps
    return AtomicTarget(
        measure=DiscreteMeasure(points=points, weights=[third, third, third, 3.0 * eps])
    )


def uniform_two_point_target(low: float = 0.0, high: float = 1.0) -> AtomicTarget:
    return AtomicTarget(measure=DiscreteMeasure.uniform([[low], [high]]))


def symmetric_pair_target(x: float = 1.5) -> AtomicTarget:
    """``(delta_{-x} + delta_{x}) / 2`` on the line."""
    return uniform_two_point_target(-x, x)


def recipe_target(
    recipe: Union[Recipe, str],
    sigma: float = 0.15,
    dimension: int = 1,
    eps: float = 0.001,
) -> Union[GaussianMixtureTarget, AtomicTarget]:
    """Build a named target; only the parameters the recipe uses are read."""
    try:
        recipe = Recipe(recipe)
    except ValueError:
        raise ConfigError(f"unknown recipe {recipe!r}") from None
    logger.debug(f"building recipe target {recipe.value}")
    if recipe == Recipe.MIXTURE_GRID:
        return mixture_grid_target(sigma=sigma)
    if recipe == Recipe.STANDARD_NORMAL:
        return standard_normal_target(dimension)
    if recipe == Recipe.SIGNED_COUNTEREXAMPLE:
        return signed_counterexample_target(eps)
    if recipe == Recipe.SYMMETRIC_PAIR:
        return symmetric_pair_target()
    return uniform_two_point_target()
