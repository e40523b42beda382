from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Tuple

import numpy as np

# (left, right) end points of a closed interval
Interval = Tuple[float, float]


@dataclass
class GridFunction:
    """Samples of a (complex) function on the uniform grid origin + step * j."""

    origin: float
    step: float
    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=complex)
        if not self.step > 0:
            raise ValueError(f"grid step must be positive, got {self.step}")
        if self.samples.ndim != 1 or self.samples.size < 2:
            raise ValueError("a grid function needs at least two samples")

    def __len__(self) -> int:
        return self.samples.size

    @property
    def grid(self) -> np.ndarray:
        return self.origin + self.step * np.arange(self.samples.size)

    @property
    def real(self) -> np.ndarray:
        return self.samples.real

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.samples) ** 2) * self.step))

    def scaled(self, c: complex) -> "GridFunction":
        return GridFunction(self.origin, self.step, c * self.samples)

    def __call__(self, x) -> np.ndarray:
        # linear interpolation, zero off the grid
        x = np.asarray(x, dtype=float)
        grid = self.grid
        re = np.interp(x, grid, self.samples.real, left=0.0, right=0.0)
        im = np.interp(x, grid, self.samples.imag, left=0.0, right=0.0)
        return re + 1j * im


@dataclass
class ScaleLocationSet:
    """Finite set of scale-location pairs (t, h) with t in [0, 1], h in (0, 1]."""

    t: np.ndarray
    h: np.ndarray
    kind: str = "custom"
    params: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.h = np.asarray(self.h, dtype=float)
        if self.t.shape != self.h.shape or self.t.ndim != 1:
            raise ValueError("t and h must be one-dimensional arrays of equal length")

    def __len__(self) -> int:
        return self.t.size

    @property
    def pairs(self) -> List[Tuple[float, float]]:
        return list(zip(self.t.tolist(), self.h.tolist()))

    @property
    def min_h(self) -> float:
        return float(self.h.min())

    def levels(self) -> List[Tuple[float, np.ndarray]]:
        """Distinct scales with the indices of the pairs that use them."""
        out = []
        for value in np.unique(self.h):
            out.append((float(value), np.flatnonzero(self.h == value)))
        return out

    def subset(self, indices) -> "ScaleLocationSet":
        indices = np.asarray(indices)
        return ScaleLocationSet(self.t[indices], self.h[indices], self.kind, dict(self.params))


class StatisticRow(NamedTuple):
    t: float
    h: float
    T: float
    V: float
    ghat: float
    w: float
    sqrt_term: float


@dataclass
class StatisticTable:
    # one entry per (t, h) of the index set, in index-set order
    t: np.ndarray
    h: np.ndarray
    T: np.ndarray
    V: np.ndarray
    ghat: np.ndarray
    w: np.ndarray
    sqrt_term: np.ndarray
    n: int
    nu: float
    mode: str = "general"

    def __len__(self) -> int:
        return self.t.size

    def row(self, i: int) -> StatisticRow:
        return StatisticRow(
            float(self.t[i]),
            float(self.h[i]),
            float(self.T[i]),
            float(self.V[i]),
            float(self.ghat[i]),
            float(self.w[i]),
            float(self.sqrt_term[i]),
        )

    def rows(self) -> List[StatisticRow]:
        return [self.row(i) for i in range(len(self))]


@dataclass
class NoiseGrid:
    """White-noise increments on [origin, origin + count * step)."""

    origin: float
    step: float
    increments: np.ndarray

    @property
    def count(self) -> int:
        return self.increments.shape[-1]

    @property
    def grid(self) -> np.ndarray:
        return self.origin + self.step * np.arange(self.count)


@dataclass
class QuantileEstimate:
    alpha: float
    value: float
    reps: int
    mc_stderr: float
    scenario_hash: str | None = None
    seed: int | None = None


@dataclass(frozen=True)
class ConfidenceRectangle:
    t: float
    h: float
    b_minus: float
    b_plus: float
    d: float
    T: float = 0.0

    @property
    def interval(self) -> Interval:
        return (self.t, self.t + self.h)


@dataclass
class QualitativeReport:
    alpha: float
    increases: List[Interval] = field(default_factory=list)
    decreases: List[Interval] = field(default_factory=list)
    minimal_increases: List[Interval] = field(default_factory=list)
    minimal_decreases: List[Interval] = field(default_factory=list)
    root_intervals: List[Interval] = field(default_factory=list)
    # "maximum" for increase -> decrease, "minimum" for decrease -> increase
    root_kinds: List[str] = field(default_factory=list)
    mode_count_lower_bound: int = 0
    maxima_lower_bound: int = 0
    metadata: Dict[str, object] = field(default_factory=dict)
