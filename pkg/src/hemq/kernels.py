"""Negative definite kernels h, induced positive kernels k and their gradients.

All functions here are pure and thread-safe. Pairwise evaluation goes through
squared Euclidean distances, so every family is written as a function of
``s = |x - y|^2``.
"""

import logging

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.spatial.distance import cdist
from scipy.special import gamma

from .errors import KernelInputError, UnsupportedParameterError
from .models.kernel_spec import KernelFamily, KernelSpec

logger = logging.getLogger(__name__)


def _as_point(x: object, name: str) -> np.ndarray:
    arr = np.ravel(np.asarray(x, dtype=float))
    if arr.size == 0:
        raise KernelInputError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise KernelInputError(f"{name} has non-finite coordinates")
    return arr


def _check_pair(x: object, y: object):
    xa, ya = _as_point(x, "x"), _as_point(y, "y")
    if xa.shape != ya.shape:
        raise KernelInputError(f"dimension mismatch: {xa.shape[0]} vs {ya.shape[0]}")
    return xa, ya


def _as_matrix(X: object, name: str) -> np.ndarray:
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise KernelInputError(f"{name} must be a matrix, got shape {arr.shape}")
    return arr


def _huber(r: float, a: float, s: np.ndarray) -> np.ndarray:
    if a == 0.0:
        return s ** (0.5 * r)
    # a^r * ((1 + s/a^2)^(r/2) - 1) is exactly zero at s = 0
    with np.errstate(over="ignore", invalid="ignore"):
        scaled = a**r * np.expm1(0.5 * r * np.log1p(s / (a * a)))
    direct = (a * a + s) ** (0.5 * r) - a**r
    return np.where(np.isfinite(scaled), scaled, direct)


def h_from_sqdist(kernel: KernelSpec, s: object) -> np.ndarray:
    """Evaluate h on an array of squared distances."""
    s = np.asarray(s, dtype=float)
    if kernel.family == KernelFamily.HUBER_ENERGY:
        return _huber(kernel.r, kernel.a, s)
    if kernel.family == KernelFamily.GAUSSIAN:
        return -np.expm1(-s / (2.0 * kernel.sigma**2)) + 0.0
    return h_from_sqdist(kernel.base, s) + kernel.lam * s


def grad_coefficient(kernel: KernelSpec, s: object) -> np.ndarray:
    """Coefficient c(s) with ``grad_x h(x, y) = c(|x-y|^2) * (x - y)``.

    Zero where ``s == 0``: the gradient there is either zero or, at the kink
    of the ``a=0, r<=1`` Huber-energy kernel, the zero subgradient.
    """
    s = np.asarray(s, dtype=float)
    if kernel.family == KernelFamily.HUBER_ENERGY:
        base = kernel.a**2 + s
        with np.errstate(divide="ignore", invalid="ignore"):
            coef = kernel.r * base ** (0.5 * kernel.r - 1.0)
    elif kernel.family == KernelFamily.GAUSSIAN:
        coef = np.exp(-s / (2.0 * kernel.sigma**2)) / kernel.sigma**2
    else:
        coef = grad_coefficient(kernel.base, s) + 2.0 * kernel.lam
    return np.where(s == 0.0, 0.0, coef)


def is_kink(kernel: KernelSpec, x: object, y: object) -> bool:
    """True where h is not differentiable in x (coinciding atoms, a=0, r<=1)."""
    xa, ya = _check_pair(x, y)
    spec = kernel.base if kernel.family == KernelFamily.PENALIZED_MEAN else kernel
    if spec.family != KernelFamily.HUBER_ENERGY:
        return False
    return spec.a == 0.0 and spec.r <= 1.0 and bool(np.array_equal(xa, ya))


def h_eval(kernel: KernelSpec, x: object, y: object) -> float:
    """h(x, y) for two points of the same dimension."""
    xa, ya = _check_pair(x, y)
    diff = xa - ya
    return float(h_from_sqdist(kernel, np.dot(diff, diff)))


def h_grad_x(kernel: KernelSpec, x: object, y: object) -> np.ndarray:
    """Gradient of h(x, y) with respect to x."""
    xa, ya = _check_pair(x, y)
    if is_kink(kernel, xa, ya):
        logger.debug("h_grad_x evaluated at a kink; returning the zero subgradient")
    diff = xa - ya
    return grad_coefficient(kernel, np.dot(diff, diff)) * diff


def k_from_h(kernel: KernelSpec, z0: object, x: object, y: object) -> float:
    """Positive kernel ``k(x, y) = (h(x, z0) + h(y, z0) - h(x, y)) / 2``."""
    z = _as_point(z0, "z0")
    xa, ya = _check_pair(x, y)
    if z.shape != xa.shape:
        raise KernelInputError(f"dimension mismatch: z0 has {z.shape[0]}, x has {xa.shape[0]}")
    return 0.5 * (h_eval(kernel, xa, z) + h_eval(kernel, ya, z) - h_eval(kernel, xa, ya))


def pairwise_h(kernel: KernelSpec, X: object, Y: object) -> np.ndarray:
    """Matrix ``H[i, j] = h(X_i, Y_j)``."""
    Xa, Ya = _as_matrix(X, "X"), _as_matrix(Y, "Y")
    if Xa.shape[1] != Ya.shape[1]:
        raise KernelInputError(f"dimension mismatch: {Xa.shape[1]} vs {Ya.shape[1]}")
    return h_from_sqdist(kernel, cdist(Xa, Ya, "sqeuclidean"))


def gram_k(kernel: KernelSpec, z0: object, X: object, Y: object) -> np.ndarray:
    """Matrix of the induced positive kernel ``k_{z0}(X_i, Y_j)``."""
    Xa, Ya = _as_matrix(X, "X"), _as_matrix(Y, "Y")
    z = _as_point(z0, "z0").reshape(1, -1)
    hx = pairwise_h(kernel, Xa, z)[:, 0]
    hy = pairwise_h(kernel, Ya, z)[:, 0]
    return 0.5 * (hx[:, None] + hy[None, :] - pairwise_h(kernel, Xa, Ya))


def weighted_grad_x(kernel: KernelSpec, X: object, Y: object, weights: object) -> np.ndarray:
    """Rows ``sum_j w_j grad_x h(X_i, Y_j)`` without forming a Q x M x N tensor."""
    Xa, Ya = _as_matrix(X, "X"), _as_matrix(Y, "Y")
    w = np.ravel(np.asarray(weights, dtype=float))
    coef = grad_coefficient(kernel, cdist(Xa, Ya, "sqeuclidean"))
    return Xa * (coef @ w)[:, None] - coef @ (w[:, None] * Ya)


def decomposition_check(r: float, a: float, t: float, quad_nodes: int = 200) -> float:
    """Integral form of the Huber-energy profile.

    Returns ``(1/-Gamma(-r)) * int_0^inf (1 - e^{-ts}) e^{-as} / s^{1+r} ds``,
    which equals ``(a + t)^r - a^r``. The axis is split at s = 1; the
    substitutions ``s = u^{1/(1-r)}`` on [0, 1] and ``s = v^{-1/r}`` on
    [1, inf) turn both pieces into smooth integrals over (0, 1] handled by
    Gauss-Legendre quadrature.
    """
    if not 0.0 < r < 1.0:
        raise UnsupportedParameterError(f"the decomposition holds for 0 < r < 1, got r={r}")
    if a < 0.0 or t < 0.0:
        raise KernelInputError(f"a and t must be nonnegative, got a={a}, t={t}")
    if quad_nodes < 100:
        raise UnsupportedParameterError(f"quad_nodes must be >= 100, got {quad_nodes}")

    nodes, weights = leggauss(quad_nodes)
    u = 0.5 * (nodes + 1.0)
    w = 0.5 * weights

    p = 1.0 / (1.0 - r)
    s_low = u**p
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(s_low > 0.0, -np.expm1(-t * s_low) / s_low, t)
    low = p * np.sum(w * ratio * np.exp(-a * s_low))

    q = 1.0 / r
    with np.errstate(over="ignore"):
        s_high = u ** (-q)
        high = q * np.sum(w * -np.expm1(-t * s_high) * np.exp(-a * s_high))

    return float((low + high) / -gamma(-r))
