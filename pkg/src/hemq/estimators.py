"""Unbiased estimators of the squared kernel distance.

Sums go through ``math.fsum`` so estimator values are exactly invariant under
permutations of the samples.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional

import numpy as np

from .distance import MASS_TOLERANCE
from .errors import InsufficientSamplesError, MassMismatchError
from .kernels import pairwise_h
from .measures import DiscreteMeasure
from .models.kernel_spec import KernelSpec
from .models.results import DistanceEstimate, EstimatorKind

logger = logging.getLogger(__name__)


def _samples(values: object) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    return arr


def _total(H: np.ndarray) -> float:
    return math.fsum(H.ravel())


def _weighted_total(H: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    return math.fsum((a[:, None] * H * b[None, :]).ravel())


def blue_two_sample(
    kernel: KernelSpec,
    xs: object,
    ys: object,
    seed: Optional[int] = None,
    legacy_cross_denominator: bool = False,
) -> DistanceEstimate:
    """Minimal-variance unbiased estimate of d^2(nu, mu) from i.i.d. samples.

    ``xs`` holds Q >= 2 draws from nu, ``ys`` J >= 2 draws from mu. The cross
    block is averaged over Q*J, the only normalization with zero bias; the
    ``legacy_cross_denominator`` flag divides it by (Q-1)(J-1) instead, for
    bias comparisons.
    """
    X, Y = _samples(xs), _samples(ys)
    q, j = X.shape[0], Y.shape[0]
    if q < 2 or j < 2:
        raise InsufficientSamplesError(f"two-sample estimator needs Q, J >= 2, got Q={q}, J={j}")
    cross_denominator = (q - 1) * (j - 1) if legacy_cross_denominator else q * j
    value = (
        _total(pairwise_h(kernel, X, Y)) / cross_denominator
        - _total(pairwise_h(kernel, X, X)) / (2.0 * q * (q - 1))
        - _total(pairwise_h(kernel, Y, Y)) / (2.0 * j * (j - 1))
    )
    return DistanceEstimate(
        value=value, kind=EstimatorKind.BLUE_TWO_SAMPLE, q_samples=q, j_samples=j, seed=seed
    )


def blue_one_sample(
    kernel: KernelSpec, nu: DiscreteMeasure, zs: object, seed: Optional[int] = None
) -> DistanceEstimate:
    """Unbiased estimate of d^2(nu, mu) for an atomic nu and J >= 2 draws from mu.

    The plug-in distance to the empirical measure minus its bias
    ``sum_{j != j'} h(z_j, z_j') / (2 J^2 (J - 1))``.
    """
    Z = _samples(zs)
    j = Z.shape[0]
    if j < 2:
        raise InsufficientSamplesError(f"one-sample estimator needs J >= 2, got J={j}")
    if abs(nu.weight_sum() - 1.0) > MASS_TOLERANCE:
        raise MassMismatchError(f"one-sample estimator needs nu of mass 1, got {nu.weight_sum()}")
    a = nu.weights
    b = np.full(j, 1.0 / j)
    h_zz = _total(pairwise_h(kernel, Z, Z))
    plug_in = (
        _weighted_total(pairwise_h(kernel, nu.points, Z), a, b)
        - 0.5 * _weighted_total(pairwise_h(kernel, nu.points, nu.points), a, a)
        - 0.5 * h_zz / (j * j)
    )
    value = plug_in - h_zz / (2.0 * j * j * (j - 1))
    return DistanceEstimate(
        value=value, kind=EstimatorKind.BLUE_ONE_SAMPLE, q_samples=nu.n_atoms, j_samples=j, seed=seed
    )


def v_statistic(
    kernel: KernelSpec, xs: object, ys: object, seed: Optional[int] = None
) -> DistanceEstimate:
    """Biased plug-in estimate: the distance between the two empirical measures."""
    X, Y = _samples(xs), _samples(ys)
    q, j = X.shape[0], Y.shape[0]
    if q < 1 or j < 1:
        raise InsufficientSamplesError("v-statistic needs at least one sample per measure")
    value = (
        _total(pairwise_h(kernel, X, Y)) / (q * j)
        - 0.5 * _total(pairwise_h(kernel, X, X)) / (q * q)
        - 0.5 * _total(pairwise_h(kernel, Y, Y)) / (j * j)
    )
    return DistanceEstimate(
        value=value, kind=EstimatorKind.V_STATISTIC, q_samples=q, j_samples=j, seed=seed
    )


def blue_weight_matrix(q: int, j: int) -> np.ndarray:
    """Coefficients of ``blue_two_sample`` on the stacked (Q + J) Gram matrix."""
    w = np.zeros((q + j, q + j))
    w[:q, :q] = -0.5 * (1.0 - np.eye(q)) / (q * (q - 1))
    w[q:, q:] = -0.5 * (1.0 - np.eye(j)) / (j * (j - 1))
    w[:q, q:] = 0.5 / (q * j)
    w[q:, :q] = 0.5 / (q * j)
    return w


def random_unbiased_weighting(
    q: int, j: int, rng: np.random.Generator, scale: float = 1.0
) -> np.ndarray:
    """A random zero-diagonal weighting satisfying the zero-bias constraints.

    Off-diagonal blocks within each sample sum to -1/2, the cross blocks
    (both orientations) sum to 1.
    """
    n = q + j
    w = rng.normal(scale=scale / (q * j), size=(n, n))
    np.fill_diagonal(w, 0.0)
    xx = ~np.eye(q, dtype=bool)
    yy = ~np.eye(j, dtype=bool)
    w[:q, :q][xx] += (-0.5 - w[:q, :q][xx].sum()) / xx.sum()
    w[q:, q:][yy] += (-0.5 - w[q:, q:][yy].sum()) / yy.sum()
    cross = w[:q, q:].sum() + w[q:, :q].sum()
    shift = (1.0 - cross) / (2 * q * j)
    w[:q, q:] += shift
    w[q:, :q] += shift
    return w


def linear_estimate(kernel: KernelSpec, xs: object, ys: object, weights: np.ndarray) -> float:
    """``sum_ab w_ab h(S_a, S_b)`` over the stacked samples ``S = (xs, ys)``."""
    stacked = np.vstack([_samples(xs), _samples(ys)])
    return _total(weights * pairwise_h(kernel, stacked, stacked))


def monte_carlo(
    trial: Callable[[np.random.Generator], float],
    trials: int,
    seed: int,
    workers: int = 1,
) -> np.ndarray:
    """Run ``trial(rng)`` with ``rng = default_rng(seed + t)`` for t < trials."""

    def run(t: int) -> float:
        return float(trial(np.random.default_rng(seed + t)))

    if workers <= 1:
        return np.array([run(t) for t in range(trials)])
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return np.array(list(pool.map(run, range(trials), chunksize=256)))
