"""Scenario documents: one JSON object fixes an analysis or a calibration.

Error-model scales are in analysis units, i.e. after the data have been
mapped into [0, 1].
"""
from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields
from typing import Dict, List, Optional, Tuple, Union

from .densities import Mixture
from .error_models import ErrorModel
from .errors import ConfigurationError
from .kernels import Kernel, make_beta_kernel
from .operators import (
    OperatorSpec,
    ProblemSpec,
    derivative,
    fractional,
    identity,
    make_problem,
    polynomial_coefficients,
    variable_coeff,
)
from .primitives import ScaleLocationSet
from .teststat import DEFAULT_NU, MultiscaleConfig, build_index_set

logger = logging.getLogger(__name__)

ALPHA_GRID = (0.01, 0.025, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.4, 0.5)
# fields that change neither the simulated statistic nor its quantiles
UNHASHED_FIELDS = ("seed", "reps", "alpha", "density", "window", "reconstruction_h",
                   "pilot_bandwidth", "pilot_floor", "method")


def build_error_model(params: Dict) -> ErrorModel:
    params = dict(params)
    model = params.pop("model", None)
    try:
        if model == "laplace":
            return ErrorModel.laplace(float(params["theta"]))
        if model == "gamma":
            return ErrorModel.gamma(float(params["r"]), float(params["theta"]))
        if model == "exponential":
            return ErrorModel.exponential(float(params["theta"]))
        if model == "none":
            return ErrorModel.none()
    except KeyError as exc:
        raise ConfigurationError(f"error model {model!r} needs parameter {exc.args[0]!r}") from exc
    raise ConfigurationError(f"unknown error model {model!r}; expected laplace, gamma, exponential or none")


def build_operator(params: Dict) -> OperatorSpec:
    params = dict(params)
    form = params.get("form")
    if form == "identity":
        return identity()
    if form == "derivative":
        return derivative(params.get("order", 1), params.get("coefficient", 1.0))
    if form == "fractional":
        if "beta" not in params:
            raise ConfigurationError("fractional operator needs 'beta'")
        return fractional(float(params["beta"]), params.get("sign", "+"))
    if form == "variable_coeff":
        if "coefficients" not in params:
            raise ConfigurationError("variable_coeff operator needs polynomial 'coefficients'")
        return variable_coeff(polynomial_coefficients(params["coefficients"]))
    if form == "multiplier":
        raise ConfigurationError("multiplier operators take a symbol function and cannot come from JSON")
    raise ConfigurationError(f"unknown operator form {form!r}")


def _canonical(value):
    # numbers as floats so 4 and 4.0 hash alike
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, dict):
        return {str(k): _canonical(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_canonical(v) for v in value]
    raise ConfigurationError(f"value {value!r} is not JSON-representable")


@dataclass
class Scenario:
    n: int = 2000
    error: Dict = field(default_factory=lambda: {"model": "laplace", "theta": 0.075})
    operator: Dict = field(default_factory=lambda: {"form": "derivative", "order": 1})
    kernel_k: int = 3
    nu: float = DEFAULT_NU
    alpha: float = 0.1
    index_set: Dict = field(default_factory=lambda: {"kind": "triangular"})
    seed: int = 0
    reps: int = 1000
    mode: str = "principal"
    grid_step: Optional[float] = None
    pilot_bandwidth: Union[str, float] = "silverman"
    pilot_floor: float = 0.05
    method: str = "exact"
    # None, "auto" (data min/max) or [lo, hi]
    window: Union[None, str, List[float]] = None
    reconstruction_h: List[float] = field(default_factory=lambda: [0.05, 0.1])
    density: Optional[Dict] = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 0:
            raise ConfigurationError(f"n must be a nonnegative integer, got {self.n}")
        if not self.nu > math.e:
            raise ConfigurationError(f"nu must exceed e, got {self.nu}")
        if not 0 < self.alpha < 1:
            raise ConfigurationError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.mode not in ("general", "principal"):
            raise ConfigurationError(f"mode must be 'general' or 'principal', got {self.mode!r}")
        if self.reps < 1:
            raise ConfigurationError(f"reps must be positive, got {self.reps}")
        if "kind" not in self.index_set:
            raise ConfigurationError("index_set needs a 'kind'")
        if self.window not in (None, "auto"):
            if len(self.window) != 2 or not self.window[0] < self.window[1]:
                raise ConfigurationError(f"window must be 'auto' or [lo, hi] with lo < hi, got {self.window}")

    @staticmethod
    def from_dict(data: Dict) -> "Scenario":
        known = {f.name for f in fields(Scenario)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown scenario fields: {sorted(unknown)}")
        return Scenario(**data)

    def to_dict(self) -> Dict:
        return asdict(self)

    @staticmethod
    def loads(text: str) -> "Scenario":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"scenario is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigurationError("scenario must be a JSON object")
        return Scenario.from_dict(data)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def canonical(self) -> str:
        data = {k: v for k, v in self.to_dict().items() if k not in UNHASHED_FIELDS}
        return json.dumps(_canonical(data), sort_keys=True, separators=(",", ":"))

    @property
    def scenario_hash(self) -> str:
        return hashlib.sha256(self.canonical().encode("utf-8")).hexdigest()

    def error_model(self) -> ErrorModel:
        return build_error_model(self.error)

    def problem(self) -> ProblemSpec:
        return make_problem(build_operator(self.operator), self.error_model())

    def kernel(self) -> Kernel:
        return make_beta_kernel(int(self.kernel_k))

    def build_index_set(self) -> ScaleLocationSet:
        params = {k: v for k, v in self.index_set.items() if k != "kind"}
        if self.index_set["kind"] == "triangular":
            params.setdefault("n", self.n)
        return build_index_set(self.index_set["kind"], params)

    def config(self) -> MultiscaleConfig:
        return MultiscaleConfig(
            problem=self.problem(),
            kernel=self.kernel(),
            nu=self.nu,
            alpha=self.alpha,
            grid_step=self.grid_step,
            pilot_bandwidth=self.pilot_bandwidth,
            pilot_floor=self.pilot_floor,
            mode=self.mode,
            method=self.method,
        )

    def mixture(self) -> Mixture:
        if self.density is None:
            raise ConfigurationError("scenario has no density")
        return Mixture.from_dict(self.density)


def reference_scenario(n: int, reps: int = 10_000, seed: int = 0) -> Scenario:
    """Laplace(0.075) errors, monotonicity, Beta(4, 4) kernel, default triangular set, principal mode."""
    return Scenario(
        n=n,
        error={"model": "laplace", "theta": 0.075},
        operator={"form": "derivative", "order": 1},
        kernel_k=3,
        nu=DEFAULT_NU,
        alpha=0.1,
        index_set={"kind": "triangular"},
        seed=seed,
        reps=reps,
        mode="principal",
    )


def window_transform(data, window) -> Tuple[float, float]:
    """(shift, scale) with analysis data (y - shift) / scale."""
    if window is None:
        return 0.0, 1.0
    if window == "auto":
        lo, hi = float(min(data)), float(max(data))
        if not hi > lo:
            raise ConfigurationError("cannot rescale data with zero range")
        return lo, hi - lo
    return float(window[0]), float(window[1] - window[0])
