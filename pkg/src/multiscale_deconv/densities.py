"""Synthetic target densities with known derivatives."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Sequence, Tuple

import numpy as np
from scipy import stats

from .errors import ConfigurationError

FAMILIES = ("beta", "truncnorm")
WEIGHT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Component:
    weight: float
    # beta: (a, b); truncnorm: (mean, sd, lower, upper)
    params: Tuple[float, ...]


@dataclass(frozen=True)
class Mixture:
    family: str
    components: Tuple[Component, ...]

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigurationError(f"unknown density family {self.family!r}; expected one of {FAMILIES}")
        if not self.components:
            raise ConfigurationError("a mixture needs at least one component")
        weights = np.array([c.weight for c in self.components])
        if np.any(weights <= 0) or abs(weights.sum() - 1.0) > WEIGHT_TOLERANCE:
            raise ConfigurationError(f"mixture weights must be positive and sum to 1, got {weights.tolist()}")
        for c in self.components:
            if self.family == "beta":
                if len(c.params) != 2 or min(c.params) <= 0:
                    raise ConfigurationError(f"beta component needs a, b > 0, got {c.params}")
            else:
                if len(c.params) != 4 or c.params[1] <= 0 or c.params[2] >= c.params[3]:
                    raise ConfigurationError(f"truncnorm component needs sd > 0 and lower < upper, got {c.params}")

    def _dist(self, c: Component):
        if self.family == "beta":
            return stats.beta(*c.params)
        mean, sd, lower, upper = c.params
        return stats.truncnorm((lower - mean) / sd, (upper - mean) / sd, loc=mean, scale=sd)

    def pdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return sum(c.weight * self._dist(c).pdf(x) for c in self.components)

    def cdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return sum(c.weight * self._dist(c).cdf(x) for c in self.components)

    def derivative(self, x, order: int = 1) -> np.ndarray:
        """order-th derivative of the pdf, order <= 2; zero outside the support."""
        if order not in (0, 1, 2):
            raise ConfigurationError(f"derivatives are available up to order 2, got {order}")
        x = np.asarray(x, dtype=float)
        total = np.zeros(x.shape)
        for c in self.components:
            f = self._dist(c).pdf(x)
            if order == 0:
                total += c.weight * f
                continue
            if self.family == "beta":
                a, b = c.params
                inside = (x > 0) & (x < 1)
                xs = np.where(inside, x, 0.5)
                g = (a - 1) / xs - (b - 1) / (1 - xs)
                factor = g if order == 1 else g**2 - (a - 1) / xs**2 - (b - 1) / (1 - xs) ** 2
                total += c.weight * np.where(inside, f * factor, 0.0)
            else:
                mean, sd = c.params[:2]
                z = (x - mean) / sd
                factor = -z / sd if order == 1 else (z**2 - 1) / sd**2
                total += c.weight * f * factor
        return total

    def sample(self, n: int, rng) -> np.ndarray:
        if n < 0:
            raise ConfigurationError(f"sample size must be nonnegative, got {n}")
        rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        weights = np.array([c.weight for c in self.components])
        labels = rng.choice(len(self.components), size=n, p=weights / weights.sum())
        out = np.empty(n)
        for i, c in enumerate(self.components):
            chosen = labels == i
            if chosen.any():
                out[chosen] = self._dist(c).rvs(size=int(chosen.sum()), random_state=rng)
        return out

    def sign_changes(self, order: int = 1, points: int = 20_001) -> int:
        """Sign changes of the order-th derivative inside (0, 1)."""
        x = np.linspace(0.0, 1.0, points)[1:-1]
        values = self.derivative(x, order)
        signs = np.sign(values[np.abs(values) > 1e-12 * np.abs(values).max()])
        return int(np.sum(signs[1:] != signs[:-1]))

    def mode_count(self, points: int = 20_001) -> int:
        """Interior local maxima of the pdf."""
        x = np.linspace(0.0, 1.0, points)[1:-1]
        d = self.derivative(x, 1)
        return int(np.sum((d[:-1] > 0) & (d[1:] <= 0)))

    def to_dict(self) -> Dict:
        keys = ("a", "b") if self.family == "beta" else ("mean", "sd", "lower", "upper")
        return {
            "family": self.family,
            "components": [dict(weight=c.weight, **dict(zip(keys, c.params))) for c in self.components],
        }

    @staticmethod
    def from_dict(data: Dict) -> "Mixture":
        family = data.get("family")
        keys = ("a", "b") if family == "beta" else ("mean", "sd", "lower", "upper")
        components = []
        for entry in data.get("components", []):
            try:
                params = tuple(float(entry[k]) if k in entry else _default(k) for k in keys)
                components.append(Component(float(entry["weight"]), params))
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigurationError(f"malformed mixture component {entry!r}") from exc
        return Mixture(family, tuple(components))


def _default(key: str) -> float:
    if key == "lower":
        return 0.0
    if key == "upper":
        return 1.0
    raise KeyError(key)


def beta_mixture(components: Sequence[Tuple[float, float, float]]) -> Mixture:
    """components = [(weight, a, b), ...]"""
    return Mixture("beta", tuple(Component(w, (a, b)) for w, a, b in components))


def truncnorm_mixture(components: Sequence[Tuple[float, float, float]], lower: float = 0.0, upper: float = 1.0) -> Mixture:
    """components = [(weight, mean, sd), ...], each truncated to [lower, upper]."""
    return Mixture("truncnorm", tuple(Component(w, (m, s, lower, upper)) for w, m, s in components))


def coverage_density() -> Mixture:
    """Trimodal beta mixture used by the coverage experiment; modes near 0.19, 0.5 and 0.81."""
    return beta_mixture([(0.3, 10.0, 40.0), (0.4, 30.0, 30.0), (0.3, 40.0, 10.0)])


def smooth_density() -> Mixture:
    """Bimodal truncated-normal mixture for unbiasedness checks."""
    return truncnorm_mixture([(0.5, 0.35, 0.1), (0.5, 0.7, 0.12)], lower=-1.0, upper=2.0)
