"""Shape-constraint operators op(p) and their pairing with an error model.

Four operator families are supported:

- ``derivative``: c * D^m with constant c, symbol c (i xi)^m;
- ``fractional``: D_+^b or D_-^b, symbol (+-i xi)^b;
- ``multiplier``: an x-independent symbol p(xi) with declared order data;
- ``variable_coeff``: sum_k a_k(x) D^k with the derivatives of every a_k
  supplied, a_k^(0..k).

A symbol factorizes as a(x, xi) |xi|^gamma iota_xi^mu; the principal part
a_P(x) |xi|^m iota_xi^mu_P drives the (sigma, tau) split.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import Polynomial

from .error_models import ErrorModel, inversion_multiplier, principal_constants
from .errors import ConfigurationError, UnsupportedModelError, UnsupportedProblemError
from .kernels import (
    abs_power,
    apply_multiplier_grid,
    fractional_derivative_grid,
    iota,
    signed_power,
)
from .primitives import GridFunction

logger = logging.getLogger(__name__)

FORMS = ("derivative", "fractional", "multiplier", "variable_coeff")


def _check_order(name: str, value: float) -> None:
    if not (value == 0 or value >= 1):
        raise ConfigurationError(f"{name} must be 0 or at least 1, got {value}")


@dataclass(frozen=True)
class OperatorSpec:
    form: str
    m: float
    gamma: float
    mu: float
    principal_mu: float
    coefficient: float = 1.0
    sign: str = "+"
    symbol: Optional[Callable] = field(default=None, compare=False)
    coefficients: Tuple[Tuple[Callable, ...], ...] = field(default=(), compare=False)
    label: str = ""

    def __post_init__(self):
        if self.form not in FORMS:
            raise ConfigurationError(f"unknown operator form {self.form!r}")
        _check_order("operator order m", self.m)
        _check_order("fractional order gamma", self.gamma)
        if self.gamma > self.m:
            raise ConfigurationError(f"gamma={self.gamma} exceeds the operator order m={self.m}")
        grid = np.linspace(0.0, 1.0, 1001)
        if np.any(self.a_P(grid) == 0):
            raise ConfigurationError("principal coefficient a_P vanishes on [0, 1]")

    @property
    def mbar(self) -> float:
        return self.m - self.gamma

    @property
    def translation_invariant(self) -> bool:
        return self.form != "variable_coeff"

    def a_P(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.form == "variable_coeff":
            return np.broadcast_to(np.asarray(self.coefficients[-1][0](t), dtype=float), t.shape)
        return np.full_like(t, self.coefficient, dtype=float)

    def adjoint_symbol(self, s) -> np.ndarray:
        """conj p(s) for x-independent symbols."""
        s = np.asarray(s, dtype=float)
        if self.form == "derivative":
            return self.coefficient * signed_power(s, self.m, "-")
        if self.form == "fractional":
            return signed_power(s, self.m, "-" if self.sign == "+" else "+")
        if self.form == "multiplier":
            return np.conj(np.asarray(self.symbol(s), dtype=complex))
        raise ConfigurationError("variable-coefficient operators have no x-independent symbol")

    def symbol_polynomial(self) -> Optional[Tuple[float, ...]]:
        """Coefficients of conj p as a polynomial in (is), for constant-coefficient derivatives."""
        if self.form != "derivative":
            return None
        m = int(self.m)
        return (0.0,) * m + (self.coefficient * (-1) ** m,)


def derivative(order: int, coefficient: float = 1.0) -> OperatorSpec:
    """c * D^order; (gamma, mu) = (m, m)."""
    if int(order) != order or order < 0:
        raise ConfigurationError(f"derivative order must be a nonnegative integer, got {order}")
    if coefficient == 0:
        raise ConfigurationError("derivative coefficient must be nonzero")
    label = "identity" if order == 0 else ("D" if order == 1 else f"D^{int(order)}")
    return OperatorSpec("derivative", float(order), float(order), float(order), float(order),
                        coefficient=float(coefficient), label=label)


def identity() -> OperatorSpec:
    return derivative(0)


def fractional(beta: float, sign: str = "+") -> OperatorSpec:
    """D_+^beta (symbol (i xi)^beta) or D_-^beta (symbol (-i xi)^beta)."""
    if sign not in ("+", "-"):
        raise ConfigurationError(f"sign must be '+' or '-', got {sign!r}")
    mu = beta if sign == "+" else -beta
    return OperatorSpec("fractional", float(beta), float(beta), mu, mu, sign=sign, label=f"D_{sign}^{beta:g}")


def multiplier(
    symbol: Callable, m: float, gamma: float, mu: float, a_P: float = 1.0, principal_mu: Optional[float] = None
) -> OperatorSpec:
    return OperatorSpec("multiplier", float(m), float(gamma), float(mu),
                        float(mu if principal_mu is None else principal_mu),
                        coefficient=float(a_P), symbol=symbol, label="multiplier")


def variable_coeff(coefficients: Sequence[Sequence[Callable]]) -> OperatorSpec:
    """sum_k a_k(x) D^k; coefficients[k] = (a_k, a_k', ..., a_k^(k)).

    The symbol is kept whole in the pseudo-differential factor (gamma = 0,
    mu = 0); the principal phase is m.
    """
    coefficients = tuple(tuple(c) for c in coefficients)
    if not coefficients:
        raise ConfigurationError("variable-coefficient operator needs at least one coefficient")
    for k, derivs in enumerate(coefficients):
        if len(derivs) < k + 1:
            raise ConfigurationError(
                f"coefficient a_{k} needs its derivatives up to order {k}, got {len(derivs) - 1}"
            )
    m = len(coefficients) - 1
    return OperatorSpec("variable_coeff", float(m), 0.0, 0.0, float(m), coefficients=coefficients,
                        label=f"variable_coeff(m={m})")


@dataclass(frozen=True)
class ProblemSpec:
    op: OperatorSpec
    err: ErrorModel
    sigma: Optional[float] = None
    tau: Optional[float] = None
    mu: Optional[float] = None
    a_P_sign: int = 1
    principal_issue: str = ""

    @property
    def total_order(self) -> float:
        return self.err.r + self.op.m

    def a_P(self, t) -> np.ndarray:
        return self.a_P_sign * self.op.a_P(t)

    def require_principal(self) -> None:
        """Raise unless the principal-symbol path applies."""
        if self.sigma is None:
            raise UnsupportedProblemError(self.principal_issue or "principal split unavailable")
        if self.op.m == 0:
            _, rho, r = principal_constants(self.err)
            if not (abs(self.mu + rho) <= r and r > 0.5):
                raise UnsupportedProblemError(
                    "order-zero operators need |mu + rho| <= r and r > 1/2 for the principal path"
                )


def normalize_phase(op: OperatorSpec, err: ErrorModel) -> Tuple[float, int]:
    """Shift mu by 2k so that sigma, tau >= 0; iota^2 = -1 flips the sign of a_P for odd k."""
    _, rho, r = principal_constants(err)
    total = r + op.m
    mu = op.principal_mu
    eps = 1e-12
    lo = math.ceil((-(total + rho) - mu) / 2 - eps)
    hi = math.floor((total - rho - mu) / 2 + eps)
    if lo > hi:
        raise UnsupportedProblemError(
            f"no phase normalization gives nonnegative sigma, tau (r={r}, m={op.m}, rho={rho}, mu={mu})"
        )
    k = min(range(lo, hi + 1), key=lambda j: (abs(j), -j))
    return mu + 2 * k, (-1) ** (k % 2)


def sigma_tau(op: OperatorSpec, err: ErrorModel) -> Tuple[float, float]:
    """sigma = (r + m + rho + mu) / 2 and tau = (r + m - rho - mu) / 2."""
    _, rho, r = principal_constants(err)
    mu, _ = normalize_phase(op, err)
    total = r + op.m
    sigma = (total + rho + mu) / 2
    tau = (total - rho - mu) / 2
    return max(sigma, 0.0), max(tau, 0.0)


def make_problem(op: OperatorSpec, err: ErrorModel) -> ProblemSpec:
    try:
        mu, sign = normalize_phase(op, err)
        sigma, tau = sigma_tau(op, err)
    except (UnsupportedModelError, UnsupportedProblemError) as exc:
        logger.info("principal path disabled: %s", exc)
        return ProblemSpec(op, err, principal_issue=str(exc))
    return ProblemSpec(op, err, sigma, tau, mu, sign)


def lambda_multiplier(spec: ProblemSpec, s) -> np.ndarray:
    """|s|^gamma iota_s^(-mu) / cf(-s)."""
    s = np.asarray(s, dtype=float)
    return abs_power(s, spec.op.gamma) * iota(s, -spec.op.mu) * inversion_multiplier(spec.err, s)


def _product_rule_adjoint(op: OperatorSpec, derivative_of):
    # sum_k (-D)^k (conj(a_k) psi) = sum_k (-1)^k sum_i C(k, i) a_k^(k - i) psi^(i)
    def apply(x):
        x = np.asarray(x, dtype=float)
        total = np.zeros(x.shape, dtype=complex)
        for k, derivs in enumerate(op.coefficients):
            for i in range(k + 1):
                coeff = np.conj(np.asarray(derivs[k - i](x), dtype=complex))
                total += (-1) ** k * math.comb(k, i) * coeff * derivative_of(i, x)
        return total

    return apply


def adjoint_apply(op: OperatorSpec, psi):
    """Formal adjoint op(p)^* psi.

    ``psi`` is a polynomial-type test function (anything with
    ``derivative(j)``, e.g. a kernel moved to [t, t + h]) or a GridFunction.
    Polynomial input gives an exact callable, grid input a GridFunction on
    the padded grid.
    """
    if isinstance(psi, GridFunction):
        if op.form == "variable_coeff":
            derivs = [fractional_derivative_grid(psi, i, "+") for i in range(int(op.m) + 1)]
            grid = derivs[0].grid
            apply = _product_rule_adjoint(op, lambda i, x: derivs[i].samples)
            return GridFunction(derivs[0].origin, psi.step, apply(grid))
        return apply_multiplier_grid(psi, op.adjoint_symbol)

    if op.form == "derivative":
        m = int(op.m)
        if m == 0 and op.coefficient == 1.0:
            return psi
        return psi.derivative(m).scaled(op.coefficient * (-1) ** m)
    if op.form == "variable_coeff":
        cache = {}

        def derivative_of(i, x):
            if i not in cache:
                cache[i] = psi.derivative(i) if i else psi
            return cache[i](x)

        return _product_rule_adjoint(op, derivative_of)
    raise ConfigurationError(f"the adjoint of a {op.form} operator needs grid input")


def polynomial_coefficients(coefficient_lists: Sequence[Sequence[float]]) -> Tuple[Tuple[Callable, ...], ...]:
    """Coefficient functions with exact derivatives from monomial coefficient lists."""
    out = []
    for k, coeffs in enumerate(coefficient_lists):
        poly = Polynomial(coeffs)
        out.append(tuple(poly.deriv(j) if j else poly for j in range(k + 1)))
    return tuple(out)


def is_polynomial_problem(spec: ProblemSpec) -> bool:
    return spec.op.symbol_polynomial() is not None and spec.err.inversion_polynomial() is not None


def closed_form_coefficients(spec: ProblemSpec) -> Tuple[float, ...]:
    """c_j with v = sum_j c_j D^j (phi o S) when both symbols are polynomials in (is)."""
    left = spec.op.symbol_polynomial()
    right = spec.err.inversion_polynomial()
    if left is None or right is None:
        raise UnsupportedProblemError("closed form needs polynomial operator and inversion symbols")
    return tuple(np.convolve(np.asarray(left, dtype=float), np.asarray(right, dtype=float)))

