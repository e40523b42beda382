"""Reproduction runs: Gaussian-statistic boxplots, the n = 10^4 quantile and simultaneous coverage."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .densities import Mixture, coverage_density
from .error_models import sample
from .gaussian_sim import quantile, simulate_statistic
from .inference import coverage_check, detection_implication, extract_report, rectangles
from .primitives import QuantileEstimate
from .scenario import Scenario, reference_scenario
from .teststat import statistics_over_set

logger = logging.getLogger(__name__)

FIG2_SIZES = (200, 1000, 10_000)
SUMMARY_COLUMNS = ("n", "min", "lower_whisker", "q1", "median", "q3", "upper_whisker", "max")


def five_number_summary(samples) -> Dict[str, float]:
    """Quartiles and Tukey whiskers (1.5 IQR, clipped to the data)."""
    x = np.sort(np.asarray(samples, dtype=float))
    q1, median, q3 = np.percentile(x, [25, 50, 75])
    iqr = q3 - q1
    lower = x[x >= q1 - 1.5 * iqr].min()
    upper = x[x <= q3 + 1.5 * iqr].max()
    return {
        "min": float(x[0]),
        "lower_whisker": float(lower),
        "q1": float(q1),
        "median": float(median),
        "q3": float(q3),
        "upper_whisker": float(upper),
        "max": float(x[-1]),
    }


def fig2(reps: int = 10_000, seed: int = 0, workers: int = 1, sizes: Sequence[int] = FIG2_SIZES) -> List[Dict[str, float]]:
    """Summaries of the principal Gaussian statistic for each sample size."""
    rows = []
    for n in sizes:
        scenario = reference_scenario(n, reps=reps, seed=seed)
        samples = simulate_statistic(scenario.config(), scenario.build_index_set(), "principal", reps, seed, workers)
        row = {"n": n, **five_number_summary(samples)}
        logger.info("n=%d: median %.4f, max %.4f", n, row["median"], row["max"])
        rows.append(row)
    return rows


def quantile10k(reps: int = 10_000, seed: int = 0, workers: int = 1, alpha: float = 0.1) -> QuantileEstimate:
    scenario = reference_scenario(10_000, reps=reps, seed=seed)
    samples = simulate_statistic(scenario.config(), scenario.build_index_set(), "principal", reps, seed, workers)
    estimate = quantile(samples, alpha)
    estimate.scenario_hash = scenario.scenario_hash
    estimate.seed = seed
    return estimate


@dataclass
class CoverageResult:
    reps: int
    q_alpha: float
    all_covered: int = 0
    implication_held: int = 0
    maxima_within_truth: int = 0
    roots_within_truth: int = 0
    runs_with_increase_and_decrease: int = 0
    true_modes: int = 0
    true_sign_changes: int = 0
    per_run: List[Dict] = field(default_factory=list)

    @property
    def coverage(self) -> float:
        return self.all_covered / self.reps

    @property
    def no_artefact_rate(self) -> float:
        return self.maxima_within_truth / self.reps


def coverage_scenario(n: int = 2000, alpha: float = 0.1, seed: int = 0, calibration_reps: int = 2000) -> Scenario:
    """Laplace(0.075) errors, monotonicity, Beta(4, 4) kernel, general mode."""
    return Scenario(
        n=n,
        error={"model": "laplace", "theta": 0.075},
        operator={"form": "derivative", "order": 1},
        kernel_k=3,
        alpha=alpha,
        index_set={"kind": "triangular"},
        seed=seed,
        reps=calibration_reps,
        mode="general",
        density=coverage_density().to_dict(),
    )


def coverage(
    reps: int = 300,
    n: int = 2000,
    alpha: float = 0.1,
    seed: int = 0,
    workers: int = 1,
    calibration_reps: int = 2000,
    density: Optional[Mixture] = None,
) -> CoverageResult:
    """Fraction of synthetic runs in which every rectangle meets the graph of f'."""
    scenario = coverage_scenario(n, alpha, seed, calibration_reps)
    density = density or scenario.mixture()
    config = scenario.config()
    index_set = scenario.build_index_set()
    err = scenario.error_model()

    samples = simulate_statistic(config, index_set, "general", calibration_reps, seed, workers)
    q = quantile(samples, alpha).value
    result = CoverageResult(reps=reps, q_alpha=q, true_modes=density.mode_count(),
                            true_sign_changes=density.sign_changes(1))
    true_derivative = lambda x: density.derivative(x, 1)

    for rep in range(reps):
        rng = np.random.default_rng(np.random.SeedSequence([seed, 1, rep]))
        data = density.sample(n, rng) + sample(err, n, rng)
        table = statistics_over_set(data, index_set, config, workers=workers)
        rects = rectangles(table, q)
        covered = bool(np.all(coverage_check(true_derivative, rects)))
        implied = bool(np.all(detection_implication(true_derivative, rects, n)))
        report = extract_report(rects, alpha)
        result.all_covered += covered
        result.implication_held += implied or not covered
        result.maxima_within_truth += report.maxima_lower_bound <= result.true_modes
        result.roots_within_truth += report.mode_count_lower_bound <= result.true_sign_changes
        result.runs_with_increase_and_decrease += bool(report.increases) and bool(report.decreases)
        result.per_run.append({
            "rep": rep,
            "covered": covered,
            "maxima_lower_bound": report.maxima_lower_bound,
            "mode_count_lower_bound": report.mode_count_lower_bound,
            "increases": len(report.increases),
            "decreases": len(report.decreases),
        })
    logger.info("coverage %.3f over %d runs (q_alpha=%.4f)", result.coverage, reps, q)
    return result
