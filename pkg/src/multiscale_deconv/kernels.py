"""Optimal Beta test kernels and spectral fractional differentiation.

Kernels live on [0, 1] and are stored by their exact monomial
coefficients (integers for the beta family). Evaluation goes through a
``numpy.polynomial.Polynomial`` in the centered variable u = 2x - 1, which
keeps the alternating binomial sums well conditioned up to k = 20.

Fourier convention: F(f)(s) = integral of exp(-isx) f(x) dx, so
F(D_+^b f)(s) = (is)^b F(f)(s) and F(D_-^b f)(s) = (-is)^b F(f)(s), with
(+-is)^b = |s|^b iota_s^(+-b) and iota_s^a = exp(a pi i sign(s) / 2).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Sequence, Tuple

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial.legendre import leggauss
from scipy import fft as sfft

from .errors import ConfigurationError, KernelRangeError, PreconditionError
from .primitives import GridFunction

logger = logging.getLogger(__name__)

MAX_K = 20
TAIL_TOLERANCE = 1e-6
NORMALIZATION_TOLERANCE = 1e-10


def iota(s, alpha: float) -> np.ndarray:
    """iota_s^alpha = exp(alpha * pi * i * sign(s) / 2); equals 1 at s = 0."""
    return np.exp(0.5j * np.pi * alpha * np.sign(s))


def abs_power(s, exponent: float) -> np.ndarray:
    # 0 ** 0 := 1, 0 ** e := 0 for e > 0
    s = np.abs(np.asarray(s, dtype=float))
    if exponent == 0:
        return np.ones_like(s)
    return np.power(s, exponent)


def signed_power(s, beta: float, sign: str = "+") -> np.ndarray:
    """(+is)^beta or (-is)^beta under the iota convention."""
    if sign not in ("+", "-"):
        raise ValueError(f"sign must be '+' or '-', got {sign!r}")
    phase = beta if sign == "+" else -beta
    return abs_power(s, beta) * iota(s, phase)


def angular_frequencies(size: int, step: float) -> np.ndarray:
    return 2.0 * np.pi * sfft.fftfreq(size, d=step)


def _centered_coefficients(coeffs: Sequence) -> np.ndarray:
    # substitute x = (1 + u) / 2 exactly, then round once
    out = [Fraction(0)] * max(len(coeffs), 1)
    for p, c in enumerate(coeffs):
        if c == 0:
            continue
        scale = Fraction(c) / (2**p)
        for i in range(p + 1):
            out[i] += scale * math.comb(p, i)
    return np.array([float(v) for v in out])


def _differentiate(coeffs: Sequence, j: int) -> Tuple:
    if j == 0:
        return tuple(coeffs)
    return tuple(c * (math.factorial(p) // math.factorial(p - j)) for p, c in enumerate(coeffs) if p >= j)


@dataclass(frozen=True)
class SupportedPolynomial:
    """A polynomial on [0, 1], zero outside."""

    coeffs: Tuple

    @cached_property
    def poly(self) -> Polynomial:
        return Polynomial(_centered_coefficients(self.coeffs), domain=[0.0, 1.0], window=[-1.0, 1.0])

    @property
    def degree(self) -> int:
        nonzero = [p for p, c in enumerate(self.coeffs) if c != 0]
        return nonzero[-1] if nonzero else 0

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        inside = (x >= 0.0) & (x <= 1.0)
        return np.where(inside, self.poly(np.clip(x, 0.0, 1.0)), 0.0)

    def derivative(self, j: int) -> "SupportedPolynomial":
        return SupportedPolynomial(_differentiate(self.coeffs, j) or (0,))

    def scaled(self, c) -> "SupportedPolynomial":
        return SupportedPolynomial(tuple(c * a for a in self.coeffs))

    def value_at(self, x, j: int = 0) -> Fraction:
        """Exact value of the j-th derivative at a rational point."""
        x = Fraction(x)
        return sum((Fraction(c) * x**p for p, c in enumerate(_differentiate(self.coeffs, j))), Fraction(0))


@dataclass(frozen=True)
class Kernel(SupportedPolynomial):
    family: str = "beta"
    k: int = 0

    @cached_property
    def smoothness(self) -> int:
        """Number of derivatives vanishing at both ends of the support.

        Distributional and classical derivatives agree up to this order.
        """
        j = 0
        while j <= self.degree and self.value_at(0, j) == 0 and self.value_at(1, j) == 0:
            j += 1
        return j


@dataclass(frozen=True)
class ScaledKernel:
    """x -> factor * base((x - t) / h), the kernel moved to [t, t + h]."""

    base: SupportedPolynomial
    t: float
    h: float
    factor: complex = 1.0

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.factor * self.base((x - self.t) / self.h)

    def derivative(self, j: int) -> "ScaledKernel":
        return ScaledKernel(self.base.derivative(j), self.t, self.h, self.factor * self.h ** (-j))

    def scaled(self, c) -> "ScaledKernel":
        return ScaledKernel(self.base, self.t, self.h, c * self.factor)


def make_beta_kernel(k: int) -> Kernel:
    """phi_k(x) = c_k x^k (1 - x)^k with c_k = (2k + 1)! / (k!)^2."""
    if not isinstance(k, (int, np.integer)) or k < 0:
        raise ConfigurationError(f"kernel index must be a nonnegative integer, got {k!r}")
    if k > MAX_K:
        raise KernelRangeError(f"beta kernels are supported for k <= {MAX_K}, got {k}")
    k = int(k)
    c_k = math.factorial(2 * k + 1) // math.factorial(k) ** 2
    coeffs = [0] * (2 * k + 1)
    for j in range(k + 1):
        coeffs[k + j] = c_k * math.comb(k, j) * (-1) ** j
    return Kernel(tuple(coeffs), family="beta", k=k)


def make_polynomial_kernel(coeffs: Sequence) -> Kernel:
    """A user kernel on [0, 1] given by monomial coefficients."""
    kernel = Kernel(tuple(coeffs), family="custom-polynomial", k=0)
    mass = integrate(kernel)
    if abs(mass - 1.0) > NORMALIZATION_TOLERANCE:
        raise ConfigurationError(f"kernel must integrate to 1, got {mass!r}")
    if np.min(kernel(np.linspace(0.0, 1.0, 10_001))) < 0:
        raise ConfigurationError("kernel must be nonnegative on [0, 1]")
    return Kernel(kernel.coeffs, family="custom-polynomial", k=kernel.smoothness)


def sample_midpoint(phi: SupportedPolynomial, x) -> np.ndarray:
    """Samples with the average of the one-sided values at the support ends.

    Fourier inversion converges to that average at a jump, and it keeps the
    spectral antiderivative of the samples second-order accurate.
    """
    x = np.asarray(x, dtype=float)
    values = phi(x)
    ends = np.isclose(x, 0.0, rtol=0.0, atol=1e-12) | np.isclose(x, 1.0, rtol=0.0, atol=1e-12)
    return np.where(ends, 0.5 * values, values)


def kernel_derivative(phi: SupportedPolynomial, j: int) -> SupportedPolynomial:
    """Exact j-th derivative on [0, 1]."""
    if j < 0:
        raise KernelRangeError(f"derivative order must be nonnegative, got {j}")
    if j > phi.degree:
        raise KernelRangeError(f"derivative order {j} exceeds kernel degree {phi.degree}")
    if j == 0:
        return phi
    return phi.derivative(j)


def gauss_legendre(points: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [0, 1]."""
    u, w = leggauss(points)
    return 0.5 * (u + 1.0), 0.5 * w


def integrate(phi: SupportedPolynomial) -> float:
    x, w = gauss_legendre(phi.degree // 2 + 2)
    return float(np.dot(w, phi(x)))


def derivative_norm(phi: SupportedPolynomial, j: int) -> float:
    """L2 norm of the j-th derivative by exact Gauss-Legendre quadrature."""
    d = kernel_derivative(phi, j)
    x, w = gauss_legendre(d.degree + 2)
    return float(np.sqrt(np.dot(w, d(x) ** 2)))


def derivative_norm_closed_form(k: int) -> float:
    """||phi_k^(k)||_2 = (2k)! / k! * sqrt(2k + 1)."""
    if k < 0 or k > MAX_K:
        raise KernelRangeError(f"closed-form norm is supported for 0 <= k <= {MAX_K}, got {k}")
    return math.factorial(2 * k) / math.factorial(k) * math.sqrt(2 * k + 1)


def _embed(f: GridFunction) -> Tuple[np.ndarray, float]:
    samples = f.samples
    peak = np.max(np.abs(samples))
    if peak > 0 and max(abs(samples[0]), abs(samples[-1])) >= TAIL_TOLERANCE * peak:
        raise PreconditionError(
            "input does not decay at the grid ends; extend the grid before differentiating"
        )
    size = 1 << int(math.ceil(math.log2(4 * samples.size)))
    left = (size - samples.size) // 2
    padded = np.zeros(size, dtype=complex)
    padded[left : left + samples.size] = samples
    return padded, f.origin - left * f.step


def fractional_derivative_grid(f: GridFunction, beta: float, sign: str = "+", pad: bool = True) -> GridFunction:
    """Apply D_+^beta or D_-^beta spectrally.

    With ``pad`` the input is checked for decay and zero-padded to a power of
    two of at least four times its length; the result covers the padded
    domain. Without ``pad`` the samples are treated as one period, which is
    what chaining two calls on the same grid needs.
    """
    if beta < 0:
        raise ValueError(f"fractional order must be nonnegative, got {beta}")
    return apply_multiplier_grid(f, lambda xi: signed_power(xi, beta, sign), pad=pad)


def apply_multiplier_grid(f: GridFunction, multiplier, pad: bool = True) -> GridFunction:
    """Inverse DFT of multiplier(xi) times the DFT of the samples."""
    if pad:
        samples, origin = _embed(f)
    else:
        samples, origin = f.samples, f.origin
    xi = angular_frequencies(samples.size, f.step)
    out = sfft.ifft(np.asarray(multiplier(xi), dtype=complex) * sfft.fft(samples))
    return GridFunction(origin, f.step, out)


def fractional_norm(phi: Kernel, beta: float, step: float = 1.0 / 4096, halfwidth: float = 8.0) -> float:
    """||D^beta phi||_2; exact quadrature for integer beta, Plancherel otherwise."""
    if float(beta).is_integer():
        return derivative_norm(phi, int(beta))
    size = 1 << int(math.ceil(math.log2(2 * halfwidth / step)))
    x = (np.arange(size) - size // 2) * step
    spectrum = sfft.fft(phi(x)) * step
    xi = angular_frequencies(size, step)
    dxi = 2.0 * np.pi / (size * step)
    return float(np.sqrt(np.sum(abs_power(xi, 2 * beta) * np.abs(spectrum) ** 2) * dxi / (2.0 * np.pi)))


def principal_transform(
    phi: Kernel, sigma: float, tau: float, step: float = 1.0 / 1024, halfwidth: float = 16.0
):
    """D_+^sigma D_-^tau phi as a callable of x.

    Integer orders give the exact polynomial (-1)^tau phi^(sigma + tau).
    Otherwise the integer part q of sigma + tau (capped at the kernel
    smoothness) is applied exactly and the rest spectrally, which keeps the
    boundary jumps of phi^(q) sampled exactly.
    """
    order = sigma + tau
    if float(sigma).is_integer() and float(tau).is_integer():
        if order > phi.smoothness:
            raise KernelRangeError(
                f"kernel smoothness {phi.smoothness} is too low for an order-{order:g} transform"
            )
        return kernel_derivative(phi, int(order)).scaled((-1) ** int(tau))
    q = min(phi.smoothness, int(math.floor(order)))
    size = 1 << int(math.ceil(math.log2(2 * halfwidth / step)))
    x = (np.arange(size) - size // 2) * step
    base = sample_midpoint(kernel_derivative(phi, q), x)
    xi = angular_frequencies(size, step)
    multiplier = abs_power(xi, order - q) * iota(xi, sigma - tau - q)
    spectrum = multiplier * sfft.fft(base)
    spectrum[size // 2] = 0.0
    out = sfft.ifft(spectrum)
    logger.debug("spectral kernel transform sigma=%g tau=%g on %d points", sigma, tau, size)
    return GridFunction(x[0], step, out.real)
