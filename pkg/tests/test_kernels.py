"""Tests for kernels, their gradients and the Huber-energy decomposition."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hemq.errors import KernelInputError, UnsupportedParameterError
from hemq.kernels import (
    decomposition_check,
    gram_k,
    h_eval,
    h_grad_x,
    is_kink,
    k_from_h,
    pairwise_h,
    weighted_grad_x,
)
from hemq.models import KernelSpec

ENERGY = KernelSpec.energy()

KERNELS = [
    ENERGY,
    KernelSpec.huber_energy(r=0.5, a=0.0),
    KernelSpec.huber_energy(r=1.0, a=2.0),
    KernelSpec.huber_energy(r=1.95, a=0.0),
    KernelSpec.huber_energy(r=0.5, a=1e-5),
    KernelSpec.gaussian(sigma=1.0),
    KernelSpec.gaussian(sigma=0.3),
    KernelSpec.penalized_mean(KernelSpec.huber_energy(r=1.0, a=1e-6), lam=0.5),
]

coords = st.floats(min_value=-50, max_value=50, allow_nan=False, allow_infinity=False)


class TestHEval:
    """Tests for kernel evaluation."""

    def test_energy_is_distance(self):
        """Test that the energy kernel is |x - y|."""
        assert h_eval(ENERGY, [0.0], [3.0]) == 3.0

    def test_zero_on_diagonal(self):
        """Test h(x, x) = 0 exactly."""
        assert h_eval(ENERGY, [1.7, -2.0], [1.7, -2.0]) == 0.0

    def test_gaussian_limits(self):
        """Test the Gaussian kernel at zero and far away."""
        kernel = KernelSpec.gaussian(sigma=1.0)

        assert h_eval(kernel, [0.0], [0.0]) == 0.0
        assert h_eval(kernel, [0.0], [50.0]) == pytest.approx(1.0)

    def test_huber_closed_form(self):
        """Test (a^2 + s)^(r/2) - a^r for r=1, a=2 at distance 3."""
        kernel = KernelSpec.huber_energy(r=1.0, a=2.0)

        assert h_eval(kernel, [0.0, 0.0], [3.0, 0.0]) == pytest.approx(math.sqrt(13.0) - 2.0)

    def test_penalized_adds_square(self):
        """Test h_base + lambda |x - y|^2."""
        kernel = KernelSpec.penalized_mean(ENERGY, lam=0.5)

        assert h_eval(kernel, [0.0], [2.0]) == pytest.approx(2.0 + 0.5 * 4.0)

    def test_dimension_mismatch(self):
        """Test that points of different dimensions are rejected."""
        with pytest.raises(KernelInputError):
            h_eval(ENERGY, [0.0, 1.0], [0.0])

    def test_non_finite_rejected(self):
        """Test that non-finite coordinates are rejected."""
        with pytest.raises(KernelInputError):
            h_eval(ENERGY, [np.nan], [0.0])
        with pytest.raises(KernelInputError):
            h_eval(ENERGY, [0.0], [np.inf])

    @pytest.mark.parametrize("kernel", KERNELS)
    @settings(max_examples=200, deadline=None)
    @given(
        x=arrays(np.float64, 3, elements=coords),
        y=arrays(np.float64, 3, elements=coords),
    )
    def test_axioms(self, kernel, x, y):
        """Test h >= 0, h(x, x) = 0 and exact symmetry."""
        assert h_eval(kernel, x, y) >= 0.0
        assert h_eval(kernel, x, x) == 0.0
        assert h_eval(kernel, x, y) == h_eval(kernel, y, x)

    def test_pairwise_matches_pointwise(self, rng):
        """Test that the Gram matrix agrees with pointwise evaluation."""
        X, Y = rng.normal(size=(5, 2)), rng.normal(size=(4, 2))
        for kernel in KERNELS:
            H = pairwise_h(kernel, X, Y)
            expected = [[h_eval(kernel, x, y) for y in Y] for x in X]
            np.testing.assert_allclose(H, expected, rtol=1e-12, atol=1e-15)


class TestNegativeDefiniteness:
    """Tests for conditional negative definiteness and Gram positivity."""

    @pytest.mark.parametrize("kernel", KERNELS)
    def test_zero_sum_quadratic_form(self, kernel, rng):
        """Test sum a_i a_j h(x_i, x_j) <= 0 whenever sum a_i = 0."""
        for _ in range(50):
            j = int(rng.integers(2, 9))
            X = rng.normal(scale=3.0, size=(j, int(rng.integers(1, 4))))
            alpha = rng.normal(size=j)
            alpha -= alpha.mean()
            assert alpha @ pairwise_h(kernel, X, X) @ alpha <= 1e-9

    @pytest.mark.parametrize("kernel", KERNELS)
    def test_gram_positive_semidefinite(self, kernel, rng):
        """Test that the Gram matrix of k_{z0} has no significantly negative eigenvalue."""
        for _ in range(50):
            X = rng.normal(scale=2.0, size=(int(rng.integers(2, 9)), 2))
            K = gram_k(kernel, X[0], X, X)
            eigenvalues = np.linalg.eigvalsh(0.5 * (K + K.T))
            assert eigenvalues.min() >= -1e-8 * max(np.trace(K), 1.0)


class TestKFromH:
    """Tests for the induced positive kernel."""

    def test_base_point(self):
        """Test k(z0, z0) = 0."""
        assert k_from_h(ENERGY, [0.0], [0.0], [0.0]) == 0.0

    def test_opposite_points(self):
        """Test k_0(1, -1) = 0 for the energy kernel."""
        assert k_from_h(ENERGY, [0.0], [1.0], [-1.0]) == 0.0

    def test_equal_points(self):
        """Test k_0(1, 1) = 1 for the energy kernel."""
        assert k_from_h(ENERGY, [0.0], [1.0], [1.0]) == 1.0

    def test_dimension_mismatch(self):
        """Test that a base point of another dimension is rejected."""
        with pytest.raises(KernelInputError):
            k_from_h(ENERGY, [0.0, 0.0], [1.0], [1.0])


class TestGradients:
    """Tests for kernel gradients."""

    def test_energy_sign(self):
        """Test d|x|/dx = 1 at x = 2."""
        np.testing.assert_allclose(h_grad_x(ENERGY, [2.0], [0.0]), [1.0])

    def test_gaussian_minimum(self):
        """Test a zero gradient at x = y."""
        np.testing.assert_array_equal(h_grad_x(KernelSpec.gaussian(1.0), [0.4], [0.4]), [0.0])

    def test_smoothed_energy(self):
        """Test the gradient of sqrt(1 + t^2) - 1 at t = 1."""
        kernel = KernelSpec.huber_energy(r=1.0, a=1.0)

        np.testing.assert_allclose(h_grad_x(kernel, [1.0], [0.0]), [1.0 / math.sqrt(2.0)])

    def test_kink_gives_zero_subgradient(self):
        """Test the zero subgradient where a=0, r<=1 and x = y."""
        assert is_kink(ENERGY, [1.0, 2.0], [1.0, 2.0])
        assert not is_kink(ENERGY, [1.0, 2.0], [1.0, 2.5])
        assert not is_kink(KernelSpec.huber_energy(r=1.0, a=1e-6), [1.0], [1.0])
        np.testing.assert_array_equal(h_grad_x(ENERGY, [1.0, 2.0], [1.0, 2.0]), [0.0, 0.0])

    @pytest.mark.parametrize("kernel", KERNELS)
    def test_finite_differences(self, kernel, rng):
        """Test the analytic gradient against central differences."""
        step = 1e-5
        for _ in range(500 // len(KERNELS) + 1):
            n = int(rng.integers(1, 5))
            x, y = rng.normal(size=n), rng.normal(size=n)
            if kernel.family.value == "gaussian":
                y = x + kernel.sigma * rng.normal(size=n)
            if np.linalg.norm(x - y) < 0.05:
                continue
            grad = h_grad_x(kernel, x, y)
            numeric = np.array(
                [
                    (h_eval(kernel, x + step * e, y) - h_eval(kernel, x - step * e, y)) / (2 * step)
                    for e in np.eye(n)
                ]
            )
            np.testing.assert_allclose(grad, numeric, rtol=1e-4, atol=1e-7)

    def test_weighted_rows(self, rng):
        """Test that weighted gradient rows sum pointwise gradients."""
        kernel = KernelSpec.huber_energy(r=0.7, a=0.1)
        X, Y, w = rng.normal(size=(3, 2)), rng.normal(size=(5, 2)), rng.random(5)
        expected = [sum(w[j] * h_grad_x(kernel, x, Y[j]) for j in range(5)) for x in X]

        np.testing.assert_allclose(weighted_grad_x(kernel, X, Y, w), expected, rtol=1e-10)


class TestDecomposition:
    """Tests for the integral representation of the Huber-energy profile."""

    @pytest.mark.parametrize(
        "r,a,t,expected",
        [
            (0.5, 0.0, 4.0, 2.0),
            (0.5, 1.0, 3.0, 1.0),
            (0.3, 0.5, 2.0, 2.5**0.3 - 0.5**0.3),
        ],
    )
    def test_examples(self, r, a, t, expected):
        """Test documented values."""
        assert decomposition_check(r, a, t) == pytest.approx(expected, rel=1e-6)

    @pytest.mark.parametrize("r", [0.2, 0.5, 0.8])
    @pytest.mark.parametrize("a", [0.0, 0.5, 2.0])
    @pytest.mark.parametrize("t", [0.1, 1.0, 10.0])
    def test_identity_grid(self, r, a, t):
        """Test (a + t)^r - a^r on the parameter grid."""
        assert decomposition_check(r, a, t) == pytest.approx((a + t) ** r - a**r, rel=1e-6)

    @pytest.mark.parametrize("r", [0.0, 1.0, 1.5])
    def test_unsupported_exponent(self, r):
        """Test that r outside (0, 1) is rejected."""
        with pytest.raises(UnsupportedParameterError):
            decomposition_check(r, 0.0, 1.0)

    def test_too_few_nodes(self):
        """Test the minimum quadrature size."""
        with pytest.raises(UnsupportedParameterError):
            decomposition_check(0.5, 0.0, 1.0, quad_nodes=50)
