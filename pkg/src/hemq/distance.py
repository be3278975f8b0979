"""Squared kernel distances between measures.

For equal-mass measures ``m1 = sum a_i delta_{x_i}`` and
``m2 = sum b_j delta_{y_j}`` the squared distance induced by h is

    d^2 = sum a_i b_j h(x_i, y_j) - 1/2 sum a_i a_i' h(x_i, x_i')
          - 1/2 sum b_j b_j' h(y_j, y_j').

Gram matrices are dense, so memory grows like (Q + B)^2.
"""

import logging

import numpy as np
from scipy.special import gammaln, hyp1f1

from .errors import DistanceInputError, MassMismatchError
from .kernels import h_from_sqdist, pairwise_h, weighted_grad_x
from .measures import DiscreteMeasure
from .models.kernel_spec import KernelSpec
from .models.results import LossBreakdown

logger = logging.getLogger(__name__)

MASS_TOLERANCE = 1e-9
ASYMPTOTIC_THRESHOLD = 30.0

_ENERGY = KernelSpec.energy()


def _breakdown(
    kernel: KernelSpec, X: np.ndarray, a: np.ndarray, Y: np.ndarray, b: np.ndarray
) -> LossBreakdown:
    cross = a @ pairwise_h(kernel, X, Y) @ b
    self_q = 0.5 * (a @ pairwise_h(kernel, X, X) @ a)
    self_t = 0.5 * (b @ pairwise_h(kernel, Y, Y) @ b)
    return LossBreakdown.from_terms(cross, self_q, self_t)


def _check_probability(quantizer: DiscreteMeasure) -> None:
    if abs(quantizer.weight_sum() - 1.0) > MASS_TOLERANCE or np.any(quantizer.weights < 0):
        raise DistanceInputError(
            f"quantizer must be a probability measure, weights sum to {quantizer.weight_sum()}"
        )


def _as_batch(batch: object) -> np.ndarray:
    arr = np.asarray(batch, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.shape[0] < 1:
        raise DistanceInputError("batch is empty")
    return arr


def squared_distance_atomic(
    kernel: KernelSpec, m1: DiscreteMeasure, m2: DiscreteMeasure
) -> LossBreakdown:
    """Exact squared distance between two atomic measures of equal mass."""
    if abs(m1.weight_sum() - m2.weight_sum()) > MASS_TOLERANCE:
        raise MassMismatchError(
            f"measures have different masses: {m1.weight_sum()} vs {m2.weight_sum()}"
        )
    return _breakdown(kernel, m1.points, m1.weights, m2.points, m2.weights)


def batch_loss(kernel: KernelSpec, quantizer: DiscreteMeasure, batch: object) -> LossBreakdown:
    """Distance from the quantizer to the uniform empirical measure of a batch."""
    Z = _as_batch(batch)
    _check_probability(quantizer)
    b = np.full(Z.shape[0], 1.0 / Z.shape[0])
    return _breakdown(kernel, quantizer.points, quantizer.weights, Z, b)


def batch_loss_grad(kernel: KernelSpec, quantizer: DiscreteMeasure, batch: object) -> np.ndarray:
    """Gradient of ``batch_loss(...).total`` with respect to the atom locations."""
    Z = _as_batch(batch)
    _check_probability(quantizer)
    b = np.full(Z.shape[0], 1.0 / Z.shape[0])
    return _points_grad(kernel, quantizer.points, quantizer.weights, Z, b)


def squared_distance_grad(
    kernel: KernelSpec, quantizer: DiscreteMeasure, target: DiscreteMeasure
) -> np.ndarray:
    """Gradient of ``squared_distance_atomic(...).total`` in the quantizer atoms."""
    if quantizer.dimension != target.dimension:
        raise DistanceInputError(
            f"dimension mismatch: {quantizer.dimension} vs {target.dimension}"
        )
    X, a = quantizer.points, quantizer.weights
    return _points_grad(kernel, X, a, target.points, target.weights)


def _points_grad(
    kernel: KernelSpec, X: np.ndarray, a: np.ndarray, Z: np.ndarray, b: np.ndarray
) -> np.ndarray:
    toward_target = weighted_grad_x(kernel, X, Z, b)
    repulsion = weighted_grad_x(kernel, X, X, a)
    return a[:, None] * (toward_target - repulsion)


def squared_distance_batch(
    kernel: KernelSpec, points: np.ndarray, weights: np.ndarray, target: DiscreteMeasure
) -> np.ndarray:
    """Squared distances from S candidate quantizers to one atomic target.

    ``points`` is S x Q x N, ``weights`` S x Q; masses must match the target.
    """
    X = np.asarray(points, dtype=float)
    w = np.asarray(weights, dtype=float)
    Y, b = target.points, target.weights
    sq_cross = (
        np.sum(X * X, axis=2)[:, :, None]
        + np.sum(Y * Y, axis=1)[None, None, :]
        - 2.0 * np.einsum("sqn,mn->sqm", X, Y)
    )
    cross = np.einsum("sq,sqm,m->s", w, h_from_sqdist(kernel, np.maximum(sq_cross, 0.0)), b)
    diff = X[:, :, None, :] - X[:, None, :, :]
    self_h = h_from_sqdist(kernel, np.sum(diff * diff, axis=3))
    self_q = 0.5 * np.einsum("sq,sqp,sp->s", w, self_h, w)
    self_t = 0.5 * (b @ pairwise_h(kernel, Y, Y) @ b)
    return cross - self_q - self_t


def mean_distance_decay(kernel: KernelSpec, target: DiscreteMeasure, alpha: object) -> float:
    """Expected squared distance from ``sum alpha_j delta_{X_j}``, X_j i.i.d. target.

    Equals ``E h(Y, Y') / 2 * sum alpha_j^2``; uniform weights give ``E h / (2J)``.
    """
    if not target.probability and (
        abs(target.weight_sum() - 1.0) > MASS_TOLERANCE or np.any(target.weights < 0)
    ):
        raise DistanceInputError("decay law needs a probability target")
    b = target.weights
    mean_h = b @ pairwise_h(kernel, target.points, target.points) @ b
    a = np.ravel(np.asarray(alpha, dtype=float))
    return float(0.5 * mean_h * np.sum(a * a))


def _kummer_negative(a: float, b: float, z: np.ndarray) -> np.ndarray:
    """Confluent hypergeometric 1F1(a; b; z) for z <= 0."""
    z = np.asarray(z, dtype=float)
    x = -z
    out = np.empty_like(x)
    far = x > max(ASYMPTOTIC_THRESHOLD, min(4.0 * b, 600.0))
    near = ~far
    if np.any(near):
        # Kummer transformation keeps the series terms positive
        out[near] = np.exp(-x[near]) * hyp1f1(b - a, b, x[near])
    if np.any(far):
        xf = x[far]
        term = np.ones_like(xf)
        total = np.ones_like(xf)
        for k in range(200):
            step = term * (a + k) * (a - b + 1.0 + k) / ((k + 1.0) * xf)
            if np.all(np.abs(step) >= np.abs(term)) and k > 0:
                break
            term = step
            total += term
            if np.all(np.abs(term) <= 1e-16 * np.abs(total)):
                break
        out[far] = np.exp(gammaln(b) - gammaln(b - a)) * xf ** (-a) * total
    return out


def _noncentral_scale(dimension: int, sigma: float) -> float:
    return sigma * np.sqrt(2.0) * np.exp(gammaln(0.5 * (dimension + 1)) - gammaln(0.5 * dimension))


def _g_rows(X: np.ndarray, mean: np.ndarray, sigma: float):
    if sigma <= 0:
        raise DistanceInputError(f"sigma must be positive, got {sigma}")
    n = X.shape[1]
    diff = X - mean[None, :]
    z = -np.sum(diff * diff, axis=1) / (2.0 * sigma**2)
    scale = _noncentral_scale(n, sigma)
    values = scale * _kummer_negative(-0.5, 0.5 * n, z)
    slope = scale / (n * sigma**2) * _kummer_negative(0.5, 0.5 * n + 1.0, z)
    return values, slope[:, None] * diff


def _gaussian_inputs(points: object, mean: object):
    X = np.atleast_1d(np.asarray(points, dtype=float))
    if X.ndim == 1:
        X = X.reshape(1, -1)
    m = np.ravel(np.asarray(mean, dtype=float))
    if X.shape[1] != m.shape[0]:
        raise DistanceInputError(f"dimension mismatch: {X.shape[1]} vs {m.shape[0]}")
    return X, m


def g_energy_gaussian(x: object, mean: object, sigma: float) -> float:
    """``E |Y - x|`` for ``Y ~ N(mean, sigma^2 Id)`` (noncentral chi mean)."""
    X, m = _gaussian_inputs(x, mean)
    values, _ = _g_rows(X, m, sigma)
    return float(values[0])


def gaussian_mean_interpoint_distance(dimension: int, sigma: float) -> float:
    """``E |Y - Y'|`` for independent ``Y, Y' ~ N(m, sigma^2 Id)``."""
    return float(_noncentral_scale(dimension, np.sqrt(2.0) * sigma))


def analytic_loss_energy_gaussian(quantizer: DiscreteMeasure, mean: object, sigma: float) -> float:
    """Energy-kernel squared distance from a quantizer to N(mean, sigma^2 Id)."""
    _check_probability(quantizer)
    X, m = _gaussian_inputs(quantizer.points, mean)
    a = quantizer.weights
    g_values, _ = _g_rows(X, m, sigma)
    self_q = 0.5 * (a @ pairwise_h(_ENERGY, X, X) @ a)
    constant = 0.5 * gaussian_mean_interpoint_distance(X.shape[1], sigma)
    return float(a @ g_values - self_q - constant)


def analytic_loss_energy_gaussian_grad(
    quantizer: DiscreteMeasure, mean: object, sigma: float
) -> np.ndarray:
    """Gradient of ``analytic_loss_energy_gaussian`` with respect to the atoms."""
    _check_probability(quantizer)
    X, m = _gaussian_inputs(quantizer.points, mean)
    a = quantizer.weights
    _, g_grad = _g_rows(X, m, sigma)
    return a[:, None] * (g_grad - weighted_grad_x(_ENERGY, X, X, a))
