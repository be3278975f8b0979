"""Optimal weights for fixed atom locations.

With ``K`` the Gram matrix of ``k_{z0}`` on the atoms and ``c = K_{XY} b``,
the squared distance to an atomic target of equal mass is
``alpha' K alpha - 2 alpha' c + const``: a convex quadratic in the weights.
"""

import itertools
import logging
from typing import Optional, Tuple

import numpy as np

from ..distance import MASS_TOLERANCE, squared_distance_atomic
from ..errors import OptimizerInputError
from ..kernels import gram_k
from ..measures import DiscreteMeasure
from ..models.kernel_spec import KernelSpec
from ..models.optimizer_spec import WeightConstraint
from ..models.results import WeightSolution

logger = logging.getLogger(__name__)

RIDGE = 1e-10
KKT_TOLERANCE = 1e-8
MAX_PROJECTED_STEPS = 200_000


def project_to_simplex(v: np.ndarray, mass: float) -> np.ndarray:
    """Euclidean projection onto ``{w >= 0, sum w = mass}`` (sort-based)."""
    v = np.asarray(v, dtype=float)
    if mass == 0.0:
        return np.zeros_like(v)
    u = np.sort(v)[::-1]
    cumulative = np.cumsum(u) - mass
    ranks = np.arange(1, v.shape[0] + 1)
    rho = np.nonzero(u - cumulative / ranks > 0)[0][-1]
    theta = cumulative[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def _solve_affine(K: np.ndarray, c: np.ndarray, mass: float) -> Tuple[np.ndarray, bool]:
    q = K.shape[0]
    system = np.zeros((q + 1, q + 1))
    system[:q, :q] = 2.0 * K
    system[:q, q] = 1.0
    system[q, :q] = 1.0
    rhs = np.concatenate([2.0 * c, [mass]])
    if np.linalg.cond(system) < 1e12:
        return np.linalg.solve(system, rhs)[:q], False
    logger.warning("singular weight system; returning the least-norm solution")
    system[:q, :q] += 2.0 * RIDGE * np.eye(q)
    solution, *_ = np.linalg.lstsq(system, rhs, rcond=None)
    return solution[:q], True


def _solve_projected(
    K: np.ndarray, c: np.ndarray, mass: float
) -> Tuple[np.ndarray, bool, bool]:
    """Accelerated projected gradient with adaptive restart.

    Returns the weights, the degeneracy flag and whether the KKT residual
    reached ``KKT_TOLERANCE``.
    """
    q = K.shape[0]
    lipschitz = 2.0 * float(np.max(np.linalg.eigvalsh(K)))
    alpha = np.full(q, mass / q)
    if lipschitz <= 0.0:
        return alpha, True, True

    def grad(w: np.ndarray) -> np.ndarray:
        return 2.0 * (K @ w - c)

    def objective(w: np.ndarray) -> float:
        return float(w @ K @ w - 2.0 * w @ c)

    def residual(w: np.ndarray) -> float:
        return float(np.max(np.abs(w - project_to_simplex(w - grad(w), mass))))

    y, t, current = alpha.copy(), 1.0, objective(alpha)
    for step in range(MAX_PROJECTED_STEPS):
        if residual(alpha) <= KKT_TOLERANCE:
            logger.debug(f"projected gradient converged after {step} steps")
            return alpha, False, True
        nxt = project_to_simplex(y - grad(y) / lipschitz, mass)
        value = objective(nxt)
        if value > current:
            # restart momentum from the last iterate
            y, t = alpha.copy(), 1.0
            continue
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        y = nxt + ((t - 1.0) / t_next) * (nxt - alpha)
        alpha, t, current = nxt, t_next, value
    logger.warning(
        f"projected gradient stopped after {MAX_PROJECTED_STEPS} steps "
        f"at KKT residual {residual(alpha):.3e}"
    )
    return alpha, False, False


def solve_weights(
    kernel: KernelSpec,
    points: object,
    target: DiscreteMeasure,
    constraint: WeightConstraint = WeightConstraint.SIMPLEX,
) -> WeightSolution:
    """Weights minimizing the distance from atoms at ``points`` to ``target``.

    The total mass always equals the target's. The optimal measure is unique
    even where the weights are not.
    """
    mass = target.weight_sum()
    if constraint == WeightConstraint.SIMPLEX and abs(mass - 1.0) > MASS_TOLERANCE:
        raise OptimizerInputError(f"simplex weights need a target of mass 1, got {mass}")
    if constraint == WeightConstraint.NONNEGATIVE and mass < 0.0:
        raise OptimizerInputError(f"nonnegative weights cannot reach mass {mass}")

    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    z0 = target.points[0]
    K = gram_k(kernel, z0, X, X)
    c = gram_k(kernel, z0, X, target.points) @ target.weights

    if constraint == WeightConstraint.UNCONSTRAINED:
        alpha, degenerate = _solve_affine(K, c, mass)
        converged = True
    else:
        alpha, degenerate, converged = _solve_projected(K, c, mass)

    loss = squared_distance_atomic(
        kernel, DiscreteMeasure(points=X, weights=alpha), target
    ).total
    return WeightSolution(
        weights=alpha,
        loss=loss,
        constraint=constraint,
        degenerate=degenerate,
        converged=converged,
    )


def best_support_subset(
    kernel: KernelSpec,
    target: DiscreteMeasure,
    size: int,
    constraint: WeightConstraint = WeightConstraint.UNCONSTRAINED,
) -> Tuple[Tuple[int, ...], WeightSolution]:
    """Best ``size`` atoms of the target support, each subset with optimal weights."""
    if not 1 <= size <= target.n_atoms:
        raise OptimizerInputError(f"subset size must be in [1, {target.n_atoms}], got {size}")
    best: Optional[Tuple[Tuple[int, ...], WeightSolution]] = None
    for subset in itertools.combinations(range(target.n_atoms), size):
        solution = solve_weights(kernel, target.points[list(subset)], target, constraint)
        logger.debug(f"support subset {subset}: loss={solution.loss:.6e}")
        if best is None or solution.loss < best[1].loss:
            best = (subset, solution)
    assert best is not None
    return best
