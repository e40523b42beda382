"""Confidence rectangles and the qualitative statements read off them."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import CalibrationError, ConfigurationError, InvalidQuantileError
from .kernels import Kernel
from .operators import ProblemSpec
from .primitives import ConfidenceRectangle, Interval, QualitativeReport, QuantileEstimate, StatisticRow, StatisticTable
from .teststat import DEFAULT_NU, MultiscaleConfig, TestFunctionBank, principal_norm

logger = logging.getLogger(__name__)

Quantile = Union[float, QuantileEstimate]


def _quantile_value(q_alpha: Quantile, expected_hash: Optional[str]) -> float:
    if isinstance(q_alpha, QuantileEstimate):
        if expected_hash is not None and q_alpha.scenario_hash not in (None, expected_hash):
            raise CalibrationError(
                f"quantile was calibrated for scenario {q_alpha.scenario_hash}, not {expected_hash}"
            )
        return float(q_alpha.value)
    return float(q_alpha)


def halfwidth(
    row: StatisticRow,
    q_alpha: Quantile,
    nu: float = DEFAULT_NU,
    mode: str = "general",
    spec: Optional[ProblemSpec] = None,
    kernel: Optional[Kernel] = None,
    expected_hash: Optional[str] = None,
) -> float:
    """d = sqrt(g_hat) * V * sqrt(2 log(nu/h)) * (1 + q_alpha loglog(nu/h) / log(nu/h)).

    In principal mode with ``spec`` and ``kernel`` given, V is replaced by
    |A a_P(t)| h^(1/2 - m - r) ||D^(r+m) phi||; otherwise the row's V is used.
    """
    q = _quantile_value(q_alpha, expected_hash)
    if mode not in ("general", "principal"):
        raise ConfigurationError(f"mode must be 'general' or 'principal', got {mode!r}")
    norm = row.V
    if mode == "principal" and spec is not None and kernel is not None:
        norm = float(principal_norm(spec, kernel, row.t, row.h))
    L = math.log(nu / row.h)
    return math.sqrt(row.ghat) * norm * math.sqrt(2.0 * L) * (1.0 + q * math.log(L) / L)


def rectangles(
    table: StatisticTable,
    q_alpha: Quantile,
    n: Optional[int] = None,
    mode: Optional[str] = None,
    expected_hash: Optional[str] = None,
) -> List[ConfidenceRectangle]:
    """b_minus = (T - d) / (h sqrt(n)) and b_plus = (T + d) / (h sqrt(n)) for every pair."""
    mode = mode or table.mode
    if mode != table.mode:
        raise CalibrationError(f"statistics were computed in {table.mode} mode, not {mode}")
    q = _quantile_value(q_alpha, expected_hash)
    n = table.n if n is None else n
    root_n = math.sqrt(n)
    out = []
    for row in table.rows():
        d = halfwidth(row, q, table.nu, mode)
        scale = row.h * root_n
        out.append(ConfidenceRectangle(row.t, row.h, (row.T - d) / scale, (row.T + d) / scale, d, row.T))
    return out


def minimal_intervals(intervals: Sequence[Interval]) -> List[Interval]:
    """Intervals that strictly contain no other interval of the family."""
    unique = sorted(set(intervals), key=lambda iv: (iv[1], -iv[0]))
    keep = []
    best_left = -math.inf
    for left, right in unique:
        if best_left < left:
            keep.append((left, right))
        best_left = max(best_left, left)
    return sorted(keep)


def disjoint_count(intervals: Sequence[Interval]) -> int:
    """Largest pairwise-disjoint subfamily of closed intervals (greedy by right end)."""
    count, end = 0, -math.inf
    for left, right in sorted(intervals, key=lambda iv: iv[1]):
        if left > end:
            count += 1
            end = right
    return count


def maximum_intervals(signed: Sequence[Tuple[Interval, int]]) -> List[Interval]:
    """[increase left, decrease right] for each increase followed by a later decrease.

    ``signed`` holds (interval, +1 or -1) sorted by interval. The latest
    increase before a decrease is used and consumed by it.
    """
    out = []
    last_increase = None
    for iv, sign in signed:
        if sign > 0:
            last_increase = iv
        elif last_increase is not None and last_increase[0] <= iv[0] and last_increase[1] <= iv[1]:
            out.append((last_increase[0], iv[1]))
            last_increase = None
    return out


def extract_report(rects: Sequence[ConfidenceRectangle], alpha: float, metadata: Optional[Dict] = None) -> QualitativeReport:
    increases = sorted(r.interval for r in rects if r.b_minus > 0)
    decreases = sorted(r.interval for r in rects if r.b_plus < 0)
    report = QualitativeReport(alpha, increases, decreases, metadata=dict(metadata or {}))
    report.minimal_increases = minimal_intervals(increases)
    report.minimal_decreases = minimal_intervals(decreases)

    signed = sorted(
        [(iv, +1) for iv in report.minimal_increases] + [(iv, -1) for iv in report.minimal_decreases]
    )
    i = 0
    while i + 1 < len(signed):
        (first, s1), (second, s2) = signed[i], signed[i + 1]
        if s1 != s2:
            report.root_intervals.append((min(first[0], second[0]), max(first[1], second[1])))
            report.root_kinds.append("maximum" if s1 > 0 else "minimum")
            i += 2
        else:
            i += 1

    report.mode_count_lower_bound = disjoint_count(report.root_intervals)
    report.maxima_lower_bound = disjoint_count(maximum_intervals(signed))
    logger.info("%d increases, %d decreases, %d root intervals", len(increases), len(decreases),
                len(report.root_intervals))
    return report


@dataclass(frozen=True)
class DetectionBoundary:
    """Smallest detectable scale and signal size as functions of n."""

    C_alpha: float
    scale_exponent: float
    signal_exponent: float

    def h_min(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=float)
        return self.C_alpha * (np.log(n) / n) ** self.scale_exponent

    def signal_threshold(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=float)
        return (np.log(n) / n) ** self.signal_exponent


def reference_norm(spec: ProblemSpec, kernel: Kernel, h: float = 1.0 / 64) -> float:
    """h^(m + r - 1/2) ||v_{t,h}||_2 at one scale, centred in [0, 1]."""
    config = MultiscaleConfig(problem=spec, kernel=kernel)
    bank = TestFunctionBank(config, h / 64)
    return h ** (spec.total_order - 0.5) * bank.norm(0.5 * (1.0 - h), h)


def detection_boundary(
    spec: ProblemSpec,
    kernel: Kernel,
    f_eps_sup: Optional[float],
    q_alpha: Quantile,
    beta: float,
    h_ref: float = 1.0 / 64,
) -> DetectionBoundary:
    """C_alpha = (sqrt(8 ||f_eps||) h^(m+r-1/2) ||v|| (1 + q_alpha))^(2 / (2m + 2r + 1))."""
    q = _quantile_value(q_alpha, None)
    if 1.0 + q <= 0:
        raise InvalidQuantileError(f"1 + q_alpha must be positive, got q_alpha={q}")
    if beta < 0:
        raise ConfigurationError(f"smoothness beta must be nonnegative, got {beta}")
    sup = spec.err.sup_density if f_eps_sup is None else f_eps_sup
    if sup is None or not math.isfinite(sup) or sup <= 0:
        raise ConfigurationError("a finite sup-norm of the error density is required")
    order = spec.total_order
    base = math.sqrt(8.0 * sup) * reference_norm(spec, kernel, h_ref) * (1.0 + q)
    C = base ** (2.0 / (2.0 * order + 1.0))
    denominator = 2.0 * beta + 2.0 * order + 1.0
    return DetectionBoundary(C, 1.0 / denominator, beta / denominator)


def _grid_extrema(true_opf: Callable, rect: ConfidenceRectangle, points: int):
    values = np.asarray(true_opf(np.linspace(rect.t, rect.t + rect.h, points)), dtype=float)
    return values.min(), values.max()


def coverage_check(true_opf: Callable, rects: Sequence[ConfidenceRectangle], points: int = 1000) -> np.ndarray:
    """True where the graph of op(p)f on [t, t + h] meets [b_minus, b_plus]."""
    out = np.empty(len(rects), dtype=bool)
    for i, rect in enumerate(rects):
        low, high = _grid_extrema(true_opf, rect, points)
        out[i] = low <= rect.b_plus and high >= rect.b_minus
    return out


def detection_implication(true_opf: Callable, rects: Sequence[ConfidenceRectangle], n: int, points: int = 1000) -> np.ndarray:
    """True where a signal beyond 2d / (h sqrt(n)) on [t, t + h] is detected with the right sign.

    Pairs without such a signal are trivially True. On a run where every
    rectangle covers, the result is all True.
    """
    out = np.ones(len(rects), dtype=bool)
    root_n = math.sqrt(n)
    for i, rect in enumerate(rects):
        threshold = 2.0 * rect.d / (rect.h * root_n)
        low, high = _grid_extrema(true_opf, rect, points)
        if low > threshold:
            out[i] = rect.b_minus > 0
        elif high < -threshold:
            out[i] = rect.b_plus < 0
    return out


def report_document(
    report: QualitativeReport,
    rects: Sequence[ConfidenceRectangle],
    nu: float,
    mode: str,
    scenario_hash: Optional[str],
) -> Dict:
    """JSON-ready report."""
    return {
        "alpha": report.alpha,
        "nu": nu,
        "mode": mode,
        "scenario_hash": scenario_hash,
        "rectangles": [
            {"t": r.t, "h": r.h, "b_minus": r.b_minus, "b_plus": r.b_plus, "d": r.d} for r in rects
        ],
        "increases": [list(iv) for iv in report.increases],
        "decreases": [list(iv) for iv in report.decreases],
        "minimal_increases": [list(iv) for iv in report.minimal_increases],
        "minimal_decreases": [list(iv) for iv in report.minimal_decreases],
        "root_intervals": [list(iv) for iv in report.root_intervals],
        "root_kinds": list(report.root_kinds),
        "mode_count_lower_bound": report.mode_count_lower_bound,
        "maxima_lower_bound": report.maxima_lower_bound,
        "metadata": report.metadata,
    }
