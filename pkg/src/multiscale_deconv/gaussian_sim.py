"""Monte-Carlo simulation of the distribution-free Gaussian statistic.

One replication draws white-noise increments on a grid covering
[-0.5, 1.5] and evaluates, for every (t, h) of the index set,

    w_h (|sum_j psi_{t,h}(s_j) dW_j| / V_{t,h} - sqrt(2 log(nu / h)))

against the SAME increments; the replication value is the maximum. The
sums for all t at one scale are a single FFT cross-correlation of the
noise with the scale's template.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy import fft as sfft
from scipy import stats

from .errors import ConfigurationError
from .kernels import SupportedPolynomial, fractional_norm, principal_transform
from .primitives import GridFunction, NoiseGrid, QuantileEstimate, ScaleLocationSet
from .teststat import (
    ClosedFormV,
    MultiscaleConfig,
    SlidingCorrelator,
    TestFunctionBank,
    calibration_weight,
    sqrt_term,
)

logger = logging.getLogger(__name__)

NOISE_WINDOW = (-0.5, 1.5)
CHUNK_REPS = 32
SNAP_TOLERANCE = 1e-6


@dataclass
class SimulationLevel:
    """Everything one scale needs inside a replication."""

    h: float
    w: float
    root: float
    norms: np.ndarray
    start: Optional[np.ndarray] = None
    correlator: Optional[SlidingCorrelator] = None
    # (first grid index, samples) per pair when the templates depend on t
    direct: List[Tuple[int, np.ndarray]] = field(default_factory=list)


@dataclass
class SimulationPlan:
    origin: float
    step: float
    count: int
    fft_size: int
    levels: List[SimulationLevel]
    mode: str

    def noise(self, seed: int, rep: int) -> NoiseGrid:
        """Increments of replication ``rep``; independent of how reps are batched."""
        rng = np.random.default_rng(np.random.SeedSequence([seed, rep]))
        return NoiseGrid(self.origin, self.step, rng.standard_normal(self.count) * math.sqrt(self.step))


def _grid_offsets(t_values: np.ndarray, origin: float, step: float) -> np.ndarray:
    position = (t_values - origin) / step
    snapped = np.rint(position)
    if np.any(np.abs(position - snapped) > SNAP_TOLERANCE):
        logger.debug("snapped %d locations to the noise grid", int(np.sum(np.abs(position - snapped) > SNAP_TOLERANCE)))
    return snapped.astype(int)


def _sample_template(psi, h: float, step: float, count: int) -> Tuple[int, np.ndarray]:
    """psi_{0,h} at the cell midpoints (i + 1/2) * step where it can be nonzero.

    Increment i covers [i * step, (i + 1) * step), so test functions with
    disjoint supports on the grid use disjoint increments.
    """
    if isinstance(psi, SupportedPolynomial):
        lo, hi = 0.0, h
        evaluate = lambda s: psi(s / h)
    elif isinstance(psi, ClosedFormV):
        lo, hi = psi.support
        evaluate = psi
    else:
        lo, hi = psi.origin, psi.origin + psi.step * (len(psi) - 1)
        evaluate = psi
    i_lo = max(int(math.floor(lo / step + SNAP_TOLERANCE)), -count)
    i_hi = min(int(math.ceil(hi / step - SNAP_TOLERANCE)), count)
    samples = np.real(evaluate((np.arange(i_lo, max(i_hi, i_lo + 1)) + 0.5) * step))
    return i_lo, np.asarray(samples, dtype=float)


def build_plan(config: MultiscaleConfig, index_set: ScaleLocationSet, mode: Optional[str] = None) -> SimulationPlan:
    """Templates, norms and calibration terms for every scale of the set."""
    mode = mode or config.mode
    if mode not in ("general", "principal"):
        raise ConfigurationError(f"mode must be 'general' or 'principal', got {mode!r}")
    step = config.step_for(index_set)
    origin = step * math.floor(NOISE_WINDOW[0] / step)
    count = int(math.ceil((NOISE_WINDOW[1] - origin) / step)) + 1
    spec, kernel = config.problem, config.kernel

    if mode == "principal":
        spec.require_principal()
        unit = principal_transform(kernel, spec.sigma, spec.tau)
        unit_norm = fractional_norm(kernel, spec.total_order)
        if isinstance(unit, GridFunction):
            unit = GridFunction(unit.origin, unit.step, unit.real)
    bank = TestFunctionBank(config, step)

    raw = []
    for h, idx in index_set.levels():
        t_values = index_set.t[idx]
        w = float(calibration_weight(h, config.nu))
        root = float(sqrt_term(h, config.nu))
        if mode == "principal":
            psi = unit if isinstance(unit, SupportedPolynomial) else GridFunction(h * unit.origin, h * unit.step, unit.samples)
            i_lo, template = _sample_template(psi, h, step, count)
            norms = np.full(idx.size, math.sqrt(h) * unit_norm)
            raw.append((h, idx, w, root, norms, t_values, i_lo, template))
        elif spec.op.translation_invariant:
            i_lo, template = _sample_template(bank.at(0.0, h), h, step, count)
            norms = np.full(idx.size, math.sqrt(np.sum(template**2) * step))
            raw.append((h, idx, w, root, norms, t_values, i_lo, template))
        else:
            direct, norms = [], []
            for t in t_values:
                v = bank.at(float(t), h)
                i_lo, samples = _sample_template(v, h, step, count)
                first = int(round((0.0 - origin) / step)) + i_lo
                direct.append((first, samples))
                norms.append(math.sqrt(np.sum(samples**2) * step))
            raw.append((h, idx, w, root, np.array(norms), None, None, direct))

    longest = max((len(r[7]) for r in raw if r[5] is not None), default=1)
    fft_size = SlidingCorrelator.fft_size(count, longest)
    levels = []
    for h, idx, w, root, norms, t_values, i_lo, template in raw:
        if t_values is None:
            levels.append(SimulationLevel(h, w, root, norms, direct=template))
            continue
        start = _grid_offsets(t_values, origin, step) + i_lo
        levels.append(SimulationLevel(h, w, root, norms, start, SlidingCorrelator(template, fft_size)))
    logger.info("simulation plan: %d scales, %d noise points, FFT size %d (%s mode)",
                len(levels), count, fft_size, mode)
    return SimulationPlan(origin, step, count, fft_size, levels, mode)


def _direct_sums(increments: np.ndarray, direct) -> np.ndarray:
    count = increments.shape[-1]
    out = np.zeros(increments.shape[:-1] + (len(direct),))
    for p, (first, samples) in enumerate(direct):
        a, b = max(first, 0), min(first + samples.size, count)
        if a < b:
            out[..., p] = increments[..., a:b] @ samples[a - first : b - first]
    return out


def statistic_from_noise(plan: SimulationPlan, increments: np.ndarray) -> np.ndarray:
    """Replication values for a (reps, count) block of increments."""
    increments = np.atleast_2d(increments)
    spectra = sfft.rfft(increments, plan.fft_size, axis=-1)
    best = np.full(increments.shape[0], -np.inf)
    for level in plan.levels:
        if level.correlator is not None:
            sums = level.correlator(spectra, level.start, plan.count)
        else:
            sums = _direct_sums(increments, level.direct)
        values = level.w * (np.abs(sums) / level.norms - level.root)
        best = np.maximum(best, values.max(axis=-1))
    return best


_PLAN: Optional[SimulationPlan] = None


def _install_plan(plan: SimulationPlan) -> None:
    global _PLAN
    _PLAN = plan


def _run_chunk(plan: SimulationPlan, seed: int, first: int, last: int) -> np.ndarray:
    increments = np.stack([plan.noise(seed, rep).increments for rep in range(first, last)])
    return statistic_from_noise(plan, increments)


def _worker_chunk(args) -> np.ndarray:
    seed, first, last = args
    return _run_chunk(_PLAN, seed, first, last)


def simulate_statistic(
    config: MultiscaleConfig,
    index_set: ScaleLocationSet,
    mode: Optional[str] = None,
    reps: int = 1000,
    seed: int = 0,
    workers: int = 1,
) -> np.ndarray:
    """``reps`` draws of the approximating statistic, in replication order."""
    if reps < 1:
        raise ConfigurationError(f"reps must be positive, got {reps}")
    plan = build_plan(config, index_set, mode)
    chunks = [(seed, a, min(a + CHUNK_REPS, reps)) for a in range(0, reps, CHUNK_REPS)]
    if workers <= 1:
        parts = [_run_chunk(plan, *chunk) for chunk in chunks]
    else:
        with ProcessPoolExecutor(max_workers=workers, initializer=_install_plan, initargs=(plan,)) as pool:
            parts = list(pool.map(_worker_chunk, chunks))
    samples = np.concatenate(parts)
    logger.info("simulated %d replications over %d pairs", reps, len(index_set))
    return samples


def quantile(samples, alpha: float) -> QuantileEstimate:
    """Nearest-rank (1 - alpha)-quantile with an order-statistic standard error."""
    samples = np.sort(np.asarray(samples, dtype=float))
    if samples.size == 0:
        raise ConfigurationError("no samples to take a quantile of")
    if not 0 < alpha < 1:
        raise ConfigurationError(f"alpha must lie in (0, 1), got {alpha}")
    n = samples.size
    p = 1.0 - alpha
    rank = min(max(int(math.ceil(round(p * n, 9))), 1), n)
    value = float(samples[rank - 1])
    if np.ptp(samples) == 0:
        stderr = 0.0
    else:
        density = float(stats.gaussian_kde(samples)(value)[0])
        stderr = math.sqrt(p * (1.0 - p) / n) / density if density > 0 else math.inf
    return QuantileEstimate(alpha=alpha, value=value, reps=n, mc_stderr=stderr)


def variance_check(psi: GridFunction, reps: int = 10_000, seed: int = 0) -> float:
    """|MC variance of sum psi(s_j) dW_j / ||psi||^2 - 1|."""
    values = np.real(psi.samples)
    target = np.sum(values**2) * psi.step
    if target == 0:
        raise ConfigurationError("psi is identically zero")
    rng = np.random.default_rng(seed)
    sums = []
    batch = max(1, min(reps, 2**22 // values.size))
    for start in range(0, reps, batch):
        size = min(batch, reps - start)
        increments = rng.standard_normal((size, values.size)) * math.sqrt(psi.step)
        sums.append(increments @ values)
    variance = float(np.var(np.concatenate(sums), ddof=1))
    return abs(variance / target - 1.0)


def circle_median(K: int, nu: float) -> float:
    """Exact median of the statistic over circle(K), whose K windows are disjoint.

    The normalized variables are then iid standard normal, so the median m
    solves P(|Z| <= m / w + sqrt(2 log(nu K)))^K = 1/2.
    """
    h = 1.0 / K
    w = float(calibration_weight(h, nu))
    root = float(sqrt_term(h, nu))
    c = stats.norm.ppf(0.5 * (1.0 + 0.5 ** (1.0 / K)))
    return w * (c - root)
