"""Measurement-error models given by their characteristic functions."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy import stats

from .errors import ConfigurationError, SingularModelError, UnsupportedModelError
from .kernels import iota

logger = logging.getLogger(__name__)

BUILTIN_MODELS = ("laplace", "gamma", "exponential", "none")


def japanese_bracket(s) -> np.ndarray:
    """<s> = (1 + s^2)^(1/2)."""
    s = np.asarray(s, dtype=float)
    return np.sqrt(1.0 + s * s)


@dataclass(frozen=True)
class ErrorModel:
    """Error density through its characteristic function E exp(-is eps).

    ``c_lower``/``c_upper`` bound |cf(s)| <s>^r; ``A``, ``rho``, ``beta0``
    are the principal constants, None when unknown.
    """

    name: str
    r: float
    theta: float = 1.0
    A: Optional[float] = None
    rho: Optional[float] = None
    beta0: Optional[float] = None
    c_lower: float = 1.0
    c_upper: float = 1.0
    cf_func: Optional[Callable] = field(default=None, compare=False)
    sampler: Optional[Callable] = field(default=None, compare=False)
    sup_density: Optional[float] = None

    def __post_init__(self):
        if self.r < 0:
            raise ConfigurationError(f"ill-posedness degree must be nonnegative, got {self.r}")
        if self.name in ("laplace", "gamma", "exponential") and not self.theta > 0:
            raise ConfigurationError(f"scale parameter must be positive, got {self.theta}")
        if self.name not in BUILTIN_MODELS:
            if self.cf_func is None:
                raise ConfigurationError(f"model {self.name!r} needs a characteristic function")
            frequencies = np.concatenate([[0.0], np.logspace(-3, 6, 400), -np.logspace(-3, 6, 400)])
            values = np.asarray(self.cf_func(frequencies), dtype=complex)
            if abs(values[0] - 1.0) > 1e-12:
                raise ConfigurationError(f"characteristic function must equal 1 at 0, got {values[0]}")
            if np.any(np.abs(values) == 0.0):
                raise SingularModelError(f"characteristic function of {self.name!r} vanishes; inversion impossible")

    @staticmethod
    def laplace(theta: float) -> "ErrorModel":
        """Density (2 theta)^-1 exp(-|x| / theta), cf (1 + theta^2 s^2)^-1."""
        return ErrorModel(
            "laplace", 2.0, theta, A=theta**2, rho=0.0, beta0=2.0,
            c_lower=min(1.0, theta**-2), c_upper=max(1.0, theta**-2),
            sup_density=1.0 / (2.0 * theta),
        )

    @staticmethod
    def gamma(r: float, theta: float) -> "ErrorModel":
        if not r > 0:
            raise ConfigurationError(f"gamma shape must be positive, got {r}")
        if r > 1:
            sup = float(stats.gamma.pdf((r - 1.0) * theta, r, scale=theta))
        elif r == 1:
            sup = 1.0 / theta
        else:
            sup = math.inf
        return ErrorModel(
            "gamma", float(r), theta, A=theta**r, rho=float(r) % 4.0, beta0=1.0,
            c_lower=min(1.0, theta**-r), c_upper=max(1.0, theta**-r),
            sup_density=sup,
        )

    @staticmethod
    def exponential(theta: float) -> "ErrorModel":
        model = ErrorModel.gamma(1.0, theta)
        return ErrorModel(
            "exponential", 1.0, theta, A=model.A, rho=model.rho, beta0=model.beta0,
            c_lower=model.c_lower, c_upper=model.c_upper, sup_density=model.sup_density,
        )

    @staticmethod
    def none() -> "ErrorModel":
        """Direct problem: no measurement error."""
        return ErrorModel("none", 0.0, 1.0, A=1.0, rho=0.0, beta0=1.0, sup_density=math.inf)

    @staticmethod
    def custom(
        name: str,
        cf_func: Callable,
        r: float,
        c_lower: float,
        c_upper: float,
        A: Optional[float] = None,
        rho: Optional[float] = None,
        beta0: Optional[float] = None,
        sampler: Optional[Callable] = None,
        sup_density: Optional[float] = None,
    ) -> "ErrorModel":
        if name in BUILTIN_MODELS:
            raise ConfigurationError(f"{name!r} names a built-in error model; give the custom model another name")
        return ErrorModel(
            name, r, 1.0, A=A, rho=rho, beta0=beta0, c_lower=c_lower, c_upper=c_upper,
            cf_func=cf_func, sampler=sampler, sup_density=sup_density,
        )

    @property
    def has_principal_constants(self) -> bool:
        return self.A is not None and self.rho is not None

    def inversion_polynomial(self) -> Optional[Tuple[float, ...]]:
        """Coefficients c_j with 1 / cf(-s) = sum_j c_j (is)^j, or None."""
        if self.name == "none":
            return (1.0,)
        if self.name == "laplace":
            return (1.0, 0.0, -self.theta**2)
        if self.name in ("gamma", "exponential") and float(self.r).is_integer():
            r = int(self.r)
            return tuple(math.comb(r, j) * (-self.theta) ** j for j in range(r + 1))
        return None


def cf(model: ErrorModel, s) -> np.ndarray:
    """F(f_eps)(s) = E exp(-is eps)."""
    s = np.asarray(s, dtype=float)
    if model.name == "none":
        return np.ones_like(s, dtype=complex)
    if model.name == "laplace":
        return (1.0 / (1.0 + (model.theta * s) ** 2)).astype(complex)
    if model.name in ("gamma", "exponential"):
        return np.power(1.0 + 1j * model.theta * s, -model.r)
    return np.asarray(model.cf_func(s), dtype=complex)


def inversion_multiplier(model: ErrorModel, s) -> np.ndarray:
    """1 / cf(-s)."""
    s = np.asarray(s, dtype=float)
    if model.name == "none":
        return np.ones_like(s, dtype=complex)
    if model.name == "laplace":
        return (1.0 + (model.theta * s) ** 2).astype(complex)
    if model.name in ("gamma", "exponential"):
        return np.power(1.0 - 1j * model.theta * s, model.r)
    value = cf(model, -s)
    if np.any(value == 0):
        raise SingularModelError(f"characteristic function of {model.name!r} vanishes")
    return 1.0 / value


def principal_constants(model: ErrorModel) -> Tuple[float, float, float]:
    """(A, rho, r) of the principal part A iota_s^rho |s|^r of 1 / cf(s)."""
    if not model.has_principal_constants:
        raise UnsupportedModelError(f"no principal constants declared for error model {model.name!r}")
    return (model.A, model.rho, model.r)


def sample(model: ErrorModel, n: int, seed) -> np.ndarray:
    """n iid draws from the error density."""
    if n < 0:
        raise ConfigurationError(f"sample size must be nonnegative, got {n}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if model.name == "none":
        return np.zeros(n)
    if model.name == "laplace":
        return rng.laplace(0.0, model.theta, n)
    if model.name in ("gamma", "exponential"):
        return rng.gamma(model.r, model.theta, n)
    if model.sampler is None:
        raise UnsupportedModelError(f"error model {model.name!r} has no sampler")
    return np.asarray(model.sampler(rng, n), dtype=float)


@dataclass
class AssumptionReport:
    model: str
    sup_ratio: float
    inf_ratio: float
    sup_residual: Optional[float] = None
    residual_slope: Optional[float] = None
    violations: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_assumptions(model: ErrorModel, s_max: float = 1e6, points: int = 2000) -> AssumptionReport:
    """Audit the polynomial-decay bounds and the principal-part residual on a log grid."""
    half = np.logspace(-3, math.log10(s_max), points // 2)
    s = np.concatenate([-half[::-1], [0.0], half])
    ratio = np.abs(cf(model, s)) * japanese_bracket(s) ** model.r
    report = AssumptionReport(model.name, float(ratio.max()), float(ratio.min()))

    if report.inf_ratio <= 0:
        report.violations.append("|cf(s)| <s>^r has infimum 0")
    tol = 1e-9
    if report.inf_ratio < model.c_lower * (1 - tol) or report.sup_ratio > model.c_upper * (1 + tol):
        report.violations.append(
            f"|cf(s)| <s>^r leaves [{model.c_lower:g}, {model.c_upper:g}]: "
            f"[{report.inf_ratio:g}, {report.sup_ratio:g}]"
        )

    if model.has_principal_constants and model.beta0 is not None:
        principal = model.A * iota(s, model.rho) * np.abs(s) ** model.r * cf(model, s)
        weighted = japanese_bracket(s) ** model.beta0 * np.abs(principal - 1.0)
        report.sup_residual = float(weighted.max())
        tail = half >= s_max / 10.0
        slopes = []
        for branch in (weighted[s > 0][tail], weighted[s < 0][::-1][tail]):
            if np.all(branch > 0):
                slopes.append(np.polyfit(np.log(half[tail]), np.log(branch), 1)[0])
        report.residual_slope = float(max(slopes)) if slopes else 0.0
        if not np.isfinite(report.sup_residual) or report.residual_slope > 0.1:
            report.violations.append(
                f"principal residual diverges (slope {report.residual_slope:.3g} over the last decade)"
            )

    for message in report.violations:
        logger.warning("error model %s: %s", model.name, message)
    return report
