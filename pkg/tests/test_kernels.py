"""Unit tests for the beta kernels and spectral differentiation."""
import math

import numpy as np
import pytest
from numpy.polynomial.legendre import Legendre

from multiscale_deconv.errors import ConfigurationError, KernelRangeError, PreconditionError
from multiscale_deconv.kernels import (
    MAX_K,
    derivative_norm,
    derivative_norm_closed_form,
    fractional_derivative_grid,
    fractional_norm,
    integrate,
    iota,
    kernel_derivative,
    make_beta_kernel,
    make_polynomial_kernel,
    principal_transform,
    sample_midpoint,
    signed_power,
)
from multiscale_deconv.primitives import GridFunction


class TestBetaKernel:
    """Tests for make_beta_kernel."""

    def test_normalizing_constant(self):
        """c_3 = 140, the leading coefficient of x^3 (1 - x)^3."""
        phi = make_beta_kernel(3)
        assert phi.coeffs[3] == 140
        assert phi.coeffs[:3] == (0, 0, 0)

    @pytest.mark.parametrize("k", [0, 1, 3, 5, 10, MAX_K])
    def test_unit_mass(self, k):
        """Every kernel integrates to one."""
        assert integrate(make_beta_kernel(k)) == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("k", [1, 3, 6])
    def test_boundary_derivatives_vanish(self, k):
        """phi^(j)(0) = phi^(j)(1) = 0 exactly for j < k."""
        phi = make_beta_kernel(k)
        for j in range(k):
            assert phi.value_at(0, j) == 0
            assert phi.value_at(1, j) == 0
        assert phi.smoothness == k

    def test_nonnegative_and_compact(self):
        """Nonnegative on [0, 1], zero outside."""
        phi = make_beta_kernel(4)
        assert np.all(phi(np.linspace(0.0, 1.0, 1001)) >= -1e-12)
        assert np.all(phi(np.array([-0.5, -1e-9, 1.0 + 1e-9, 2.0])) == 0)

    def test_symmetric(self):
        """phi(x) = phi(1 - x)."""
        phi = make_beta_kernel(3)
        x = np.linspace(0.0, 1.0, 101)
        np.testing.assert_allclose(phi(x), phi(1.0 - x), atol=1e-12)

    def test_large_k_rejected(self):
        """k above the supported range raises."""
        with pytest.raises(KernelRangeError):
            make_beta_kernel(MAX_K + 1)

    def test_negative_k_rejected(self):
        """A negative index is a configuration error."""
        with pytest.raises(ConfigurationError):
            make_beta_kernel(-1)


class TestDerivativeNorms:
    """Tests for derivative norms and the Legendre identity."""

    def test_third_derivative_norm(self):
        """||phi_3'''||_2 = 120 sqrt(7)."""
        phi = make_beta_kernel(3)
        assert derivative_norm(phi, 3) == pytest.approx(120 * math.sqrt(7), rel=1e-8)

    @pytest.mark.parametrize("k", range(0, 6))
    def test_closed_form_matches_quadrature(self, k):
        """(2k)!/k! sqrt(2k + 1) equals the quadrature norm."""
        phi = make_beta_kernel(k)
        assert derivative_norm(phi, k) == pytest.approx(derivative_norm_closed_form(k), rel=1e-8)

    @pytest.mark.parametrize("k", range(1, 6))
    def test_legendre_identity(self, k):
        """phi_k^(k)(x) = (-1)^k (2k+1)!/k! L_k(2x - 1)."""
        phi = make_beta_kernel(k)
        x = np.linspace(0.0, 1.0, 257)
        expected = (-1) ** k * math.factorial(2 * k + 1) / math.factorial(k) * Legendre.basis(k)(2 * x - 1)
        np.testing.assert_allclose(kernel_derivative(phi, k)(x), expected, rtol=1e-8, atol=1e-8 * np.abs(expected).max())

    def test_derivative_beyond_degree(self):
        """Asking for more derivatives than the degree raises."""
        with pytest.raises(KernelRangeError):
            kernel_derivative(make_beta_kernel(2), 5)

    def test_fractional_norm_integer_order(self):
        """Integer orders use the exact quadrature."""
        phi = make_beta_kernel(3)
        assert fractional_norm(phi, 3) == pytest.approx(120 * math.sqrt(7), rel=1e-10)

    def test_fractional_norm_interpolates(self):
        """||D^1.5 phi|| lies between the neighbouring integer norms (log-convexity)."""
        phi = make_beta_kernel(3)
        half = fractional_norm(phi, 1.5)
        assert half <= math.sqrt(derivative_norm(phi, 1) * derivative_norm(phi, 2)) * (1 + 1e-6)
        assert half > derivative_norm(phi, 1)


class TestPolynomialKernel:
    """Tests for user-supplied polynomial kernels."""

    def test_accepts_epanechnikov_type(self):
        """6x(1 - x) is a valid kernel."""
        phi = make_polynomial_kernel((0, 6, -6))
        assert phi.family == "custom-polynomial"
        assert phi.smoothness == 1

    def test_rejects_wrong_mass(self):
        """Mass other than one raises."""
        with pytest.raises(ConfigurationError):
            make_polynomial_kernel((0, 3, -3))

    def test_rejects_negative(self):
        """A kernel dipping below zero raises."""
        with pytest.raises(ConfigurationError):
            make_polynomial_kernel((4, -6))


class TestFractionalDerivative:
    """Tests for spectral fractional differentiation."""

    @staticmethod
    def gaussian_bump(points=2**16):
        x = np.linspace(-4.0, 4.0, points, endpoint=False)
        return GridFunction(x[0], x[1] - x[0], np.exp(-x**2))

    def test_iota_conventions(self):
        """iota_0 = 1 and (is)^1 = i s."""
        assert iota(0.0, 0.7) == 1
        s = np.array([-2.0, 0.0, 3.0])
        np.testing.assert_allclose(signed_power(s, 1.0, "+"), 1j * s, atol=1e-15)
        np.testing.assert_allclose(signed_power(s, 1.0, "-"), -1j * s, atol=1e-15)
        assert signed_power(0.0, 0.5) == 0

    def test_semigroup(self):
        """D_+^(1/2) applied twice equals D_+^1."""
        f = self.gaussian_bump()
        half = fractional_derivative_grid(f, 0.5)
        twice = fractional_derivative_grid(half, 0.5, pad=False)
        once = fractional_derivative_grid(f, 1.0)
        error = np.max(np.abs(twice.samples - once.samples)) / np.max(np.abs(once.samples))
        assert error < 1e-4

    def test_first_derivative_matches_analytic(self):
        """D^1 of exp(-x^2) is -2x exp(-x^2)."""
        f = self.gaussian_bump()
        d = fractional_derivative_grid(f, 1.0)
        x = d.grid
        expected = -2 * x * np.exp(-x**2)
        assert np.max(np.abs(d.samples - expected)) < 1e-5

    def test_non_decaying_input_rejected(self):
        """Inputs that do not decay at the grid ends raise."""
        f = GridFunction(0.0, 0.01, np.ones(128))
        with pytest.raises(PreconditionError):
            fractional_derivative_grid(f, 0.5)


class TestPrincipalTransform:
    """Tests for D_+^sigma D_-^tau phi."""

    def test_integer_orders_exact(self):
        """sigma=2, tau=1 gives -phi'''."""
        phi = make_beta_kernel(3)
        psi = principal_transform(phi, 2, 1)
        x = np.linspace(0.0, 1.0, 33)
        np.testing.assert_allclose(psi(x), -kernel_derivative(phi, 3)(x), atol=1e-9)

    def test_too_smooth_request_rejected(self):
        """Orders above the kernel smoothness raise."""
        with pytest.raises(KernelRangeError):
            principal_transform(make_beta_kernel(2), 2, 1)

    def test_fractional_order_norm(self):
        """The spectral transform has the Plancherel norm of D^(sigma+tau) phi."""
        phi = make_beta_kernel(3)
        psi = principal_transform(phi, 1.0, 0.5)
        assert psi.l2_norm() == pytest.approx(fractional_norm(phi, 1.5), rel=1e-3)

    def test_midpoint_sampling(self):
        """Jump values at the support ends are halved."""
        d3 = kernel_derivative(make_beta_kernel(3), 3)
        values = sample_midpoint(d3, np.array([0.0, 0.5, 1.0]))
        assert values[0] == pytest.approx(420.0)
        assert values[2] == pytest.approx(-420.0)
