"""Local test statistics T_{t,h} and the multiscale supremum.

For each scale-location pair (t, h) the test function v_{t,h} is the
inverse Fourier transform of conj p(s) / cf(-s) times F(phi o S_{t,h}),
S_{t,h}(u) = (u - t) / h, and

    T_{t,h} = n^(-1/2) sum_k Re v_{t,h}(Y_k).

When both symbols are polynomials in (is), v_{t,h} is a finite sum of
scaled kernel derivatives and is evaluated exactly. Variable polynomial
coefficients with a polynomial inversion symbol give one exact polynomial
on [t, t + h]. Everything else is computed on a grid by FFT.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import Polynomial
from scipy import fft as sfft
from scipy import stats

from .error_models import inversion_multiplier
from .errors import ConfigurationError, DegenerateDataError, ResolutionError, UnsupportedProblemError
from .kernels import (
    Kernel,
    ScaledKernel,
    SupportedPolynomial,
    angular_frequencies,
    fractional_norm,
    gauss_legendre,
    kernel_derivative,
    sample_midpoint,
    signed_power,
)
from .operators import ProblemSpec, adjoint_apply, closed_form_coefficients, is_polynomial_problem
from .primitives import GridFunction, ScaleLocationSet, StatisticTable

logger = logging.getLogger(__name__)

DEFAULT_NU = math.exp(math.e**2)
ALIASING_TOLERANCE = 0.01
SET_TOLERANCE = 1e-9
# resolution of FFT-computed test functions, in points per scale
FOURIER_POINTS_PER_SCALE = 256
# halvings of the Fourier step tried before giving up on a scale
MAX_REFINEMENTS = 4


# -- calibration --------------------------------------------------------------

def calibration_weight(h, nu: float = DEFAULT_NU) -> np.ndarray:
    """w_h = sqrt(log(nu / h) / 2) / log log(nu / h)."""
    L = np.log(nu / np.asarray(h, dtype=float))
    return np.sqrt(0.5 * L) / np.log(L)


def sqrt_term(h, nu: float = DEFAULT_NU) -> np.ndarray:
    """sqrt(2 log(nu / h))."""
    return np.sqrt(2.0 * np.log(nu / np.asarray(h, dtype=float)))


# -- index sets ---------------------------------------------------------------

def triangular_defaults(n: int) -> Tuple[int, float]:
    """N = floor(n^(3/5)) and u = 1 / log log n."""
    if n < 16:
        raise ConfigurationError(f"sample size {n} too small for the default triangular set")
    return int(math.floor(n**0.6)), 1.0 / math.log(math.log(n))


def build_index_set(kind: str, params: Optional[Dict] = None) -> ScaleLocationSet:
    """Enumerate a scale-location set.

    triangular(N, u): (k/N, l/N) with 1 <= l <= floor(N u), k + l <= N;
    circle(K): (i/K, 1/K); dyadic(j0, j1): (k 2^-j, 2^-j);
    custom(pairs): explicit (t, h) pairs.
    """
    params = dict(params or {})
    if kind == "triangular":
        if params.get("N") is None or params.get("u") is None:
            if "n" not in params:
                raise ConfigurationError("triangular set needs N and u, or a sample size n")
            N, u = triangular_defaults(int(params["n"]))
            if params.get("N") is None:
                params["N"] = N
            if params.get("u") is None:
                params["u"] = u
        N, u = int(params["N"]), float(params["u"])
        if N < 2 or not 0 < u <= 1:
            raise ConfigurationError(f"triangular set needs N >= 2 and u in (0, 1], got N={N}, u={u}")
        top = int(math.floor(N * u + 1e-12))
        t, h = [], []
        for l in range(1, top + 1):
            for k in range(0, N - l + 1):
                t.append(k / N)
                h.append(l / N)
        params = {"N": N, "u": u}
    elif kind == "circle":
        K = int(params.get("K", 0))
        if K < 1:
            raise ConfigurationError(f"circle set needs K >= 1, got {K}")
        t = [i / K for i in range(K)]
        h = [1.0 / K] * K
        params = {"K": K}
    elif kind == "dyadic":
        j0, j1 = int(params.get("j0", 0)), int(params.get("j1", -1))
        if j0 < 0 or j0 > j1:
            raise ConfigurationError(f"dyadic set needs 0 <= j0 <= j1, got j0={j0}, j1={j1}")
        t, h = [], []
        for j in range(j0, j1 + 1):
            for k in range(2**j):
                t.append(k * 2.0**-j)
                h.append(2.0**-j)
        params = {"j0": j0, "j1": j1}
    elif kind == "custom":
        pairs = params.get("pairs", [])
        t = [float(p[0]) for p in pairs]
        h = [float(p[1]) for p in pairs]
        params = {"pairs": [[a, b] for a, b in zip(t, h)]}
    else:
        raise ConfigurationError(f"unknown index set kind {kind!r}")

    index_set = ScaleLocationSet(np.array(t, dtype=float), np.array(h, dtype=float), kind, params)
    if len(index_set) == 0:
        raise ConfigurationError(f"{kind} index set is empty")
    if np.any(index_set.t < 0) or np.any(index_set.t > 1) or np.any(index_set.h <= 0) or np.any(index_set.h > 1):
        raise ConfigurationError("index set pairs must satisfy t in [0, 1] and h in (0, 1]")
    if kind in ("triangular", "circle") and np.any(index_set.t + index_set.h > 1 + SET_TOLERANCE):
        raise ConfigurationError("index set leaves the unit interval")
    logger.info("%s index set with %d pairs, smallest scale %.5g", kind, len(index_set), index_set.min_h)
    return index_set


def trivial_lower_bound(index_set: ScaleLocationSet, nu: float = DEFAULT_NU) -> float:
    """-inf_h log(nu/h) / log log(nu/h); no value of the statistic lies below it."""
    L = np.log(nu / index_set.h)
    return float(np.max(-L / np.log(L)))


def dyadic_thresholds(index_set: ScaleLocationSet, q_alpha: float, nu: float = DEFAULT_NU) -> np.ndarray:
    """Level-dependent thresholds on |normalized coefficient| equivalent to T_n <= q_alpha."""
    return sqrt_term(index_set.h, nu) + q_alpha / calibration_weight(index_set.h, nu)


# -- configuration ------------------------------------------------------------

@dataclass
class MultiscaleConfig:
    problem: ProblemSpec
    kernel: Kernel
    nu: float = DEFAULT_NU
    alpha: float = 0.1
    grid_step: Optional[float] = None
    pilot_bandwidth: Union[str, float] = "silverman"
    pilot_floor: float = 0.05
    mode: str = "general"
    domain_halfwidth: float = 16.0
    method: str = "exact"

    def __post_init__(self):
        if not self.nu > math.e:
            raise ConfigurationError(f"nu must exceed e, got {self.nu}")
        if not 0 < self.alpha < 1:
            raise ConfigurationError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.grid_step is not None and not self.grid_step > 0:
            raise ConfigurationError(f"grid step must be positive, got {self.grid_step}")
        if not self.pilot_floor > 0:
            raise ConfigurationError(f"pilot floor must be positive, got {self.pilot_floor}")
        if self.mode not in ("general", "principal"):
            raise ConfigurationError(f"mode must be 'general' or 'principal', got {self.mode!r}")
        if self.domain_halfwidth < 8:
            raise ConfigurationError("domain halfwidth must be at least 8 scales")
        if self.method not in ("exact", "binned"):
            raise ConfigurationError(f"method must be 'exact' or 'binned', got {self.method!r}")
        if self.mode == "principal":
            self.problem.require_principal()

    def step_for(self, index_set: ScaleLocationSet) -> float:
        """Grid step for the set; at most the smallest scale over 16."""
        limit = index_set.min_h / 16.0
        if self.grid_step is None:
            return limit
        if self.grid_step > limit * (1 + 1e-9):
            raise ResolutionError(
                f"grid step {self.grid_step:g} is too coarse for scale {index_set.min_h:g}; use at most {limit:g}"
            )
        return self.grid_step


# -- test functions -----------------------------------------------------------

@dataclass(frozen=True)
class ClosedFormV:
    """v_{t,h}(y) = sum_j c_j phi^(j)((y - t) / h), supported on [t, t + h]."""

    t: float
    h: float
    terms: Tuple[Tuple[float, SupportedPolynomial], ...]

    def unit(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        for c, d in self.terms:
            out += c * d(x)
        return out

    def __call__(self, y) -> np.ndarray:
        return self.unit((np.asarray(y, dtype=float) - self.t) / self.h)

    @property
    def support(self) -> Tuple[float, float]:
        return (self.t, self.t + self.h)

    def norm(self) -> float:
        combined = Polynomial([0.0], domain=[0.0, 1.0], window=[-1.0, 1.0])
        for c, d in self.terms:
            combined = combined + c * d.poly
        x, w = gauss_legendre(combined.degree() + 2)
        return float(np.sqrt(self.h * np.dot(w, combined(x) ** 2)))


def v_closed_form(spec: ProblemSpec, kernel: Kernel, t: float, h: float) -> ClosedFormV:
    """Exact v_{t,h} for polynomial operator and inversion symbols."""
    coeffs = closed_form_coefficients(spec)
    terms = []
    for j, c in enumerate(coeffs):
        if c == 0:
            continue
        if j > kernel.smoothness:
            raise UnsupportedProblemError(
                f"closed form needs a kernel with {j} vanishing boundary derivatives, "
                f"this one has {kernel.smoothness}"
            )
        terms.append((float(c) * h ** (-j), kernel_derivative(kernel, j)))
    return ClosedFormV(t, h, tuple(terms))


def v_closed_form_laplace_D(theta: float, kernel: Kernel, t: float, h: float) -> ClosedFormV:
    """v_{t,h}(y) = h^-1 [(theta^2 / h^2) phi'''((y - t)/h) - phi'((y - t)/h)]."""
    terms = [(-1.0 / h, kernel_derivative(kernel, 1))]
    if theta != 0:
        terms.append((theta**2 / h**3, kernel_derivative(kernel, 3)))
    return ClosedFormV(t, h, tuple(terms))


def has_closed_form(spec: ProblemSpec, kernel: Kernel) -> bool:
    if not is_polynomial_problem(spec):
        return False
    coeffs = closed_form_coefficients(spec)
    top = max(j for j, c in enumerate(coeffs) if c != 0)
    return top <= kernel.smoothness


def _real_polynomial_coefficients(spec: ProblemSpec) -> Optional[List[Polynomial]]:
    if spec.op.form != "variable_coeff":
        return None
    polys = [derivs[0] for derivs in spec.op.coefficients]
    if not all(isinstance(p, Polynomial) and np.isrealobj(p.coef) for p in polys):
        return None
    return [p.convert() for p in polys]


def has_exact_variable_form(spec: ProblemSpec, kernel: Kernel) -> bool:
    """Polynomial a_k, polynomial inversion symbol and enough kernel smoothness."""
    polys = _real_polynomial_coefficients(spec)
    inversion = spec.err.inversion_polynomial()
    if polys is None or inversion is None:
        return False
    top = max(
        (j + k for j, r in enumerate(inversion) if r != 0 for k, a in enumerate(polys) if np.any(a.coef != 0)),
        default=0,
    )
    return top <= kernel.smoothness


def v_variable_polynomial(spec: ProblemSpec, kernel: Kernel, t: float, h: float) -> ClosedFormV:
    """Exact v_{t,h} = sum_j r_j D^j sum_k (-D)^k (a_k (phi o S_{t,h})).

    r_j are the inversion coefficients of 1 / cf(-s). Everything is built
    as one polynomial in the rescaled variable x = (u - t) / h.
    """
    line = Polynomial([t, h])
    phi = Polynomial([float(c) for c in kernel.coeffs])
    inversion = spec.err.inversion_polynomial()
    unit = Polynomial([0.0])
    for k, a in enumerate(_real_polynomial_coefficients(spec)):
        shifted = sum((float(c) * line**p for p, c in enumerate(a.coef)), Polynomial([0.0]))
        product = shifted * phi
        for j, r in enumerate(inversion):
            if r != 0:
                unit = unit + r * (-1) ** k * h ** (-(j + k)) * product.deriv(j + k)
    return ClosedFormV(t, h, ((1.0, SupportedPolynomial(tuple(float(c) for c in unit.coef))),))


def v_fourier(
    spec: ProblemSpec,
    kernel: Kernel,
    t: float,
    h: float,
    grid_step: float,
    domain_halfwidth: float = 16.0,
) -> GridFunction:
    """v_{t,h} on the grid t + grid_step * j by FFT.

    Works in the rescaled variable x = (u - t) / h. For x-independent
    symbols the integer part q of the total order (capped at the kernel
    smoothness) is applied exactly to the polynomial kernel, and only
    M(s) / (is)^q is applied spectrally. Variable-coefficient operators
    apply the exact adjoint in physical space and invert the error
    spectrally.
    """
    if domain_halfwidth < 8:
        raise ConfigurationError("domain halfwidth must be at least 8 scales")
    dx = grid_step / h
    size = 1 << int(math.ceil(math.log2(2.0 * domain_halfwidth / dx)))
    x = (np.arange(size) - size // 2) * dx
    xi = angular_frequencies(size, dx)
    s = xi / h
    nonzero = s != 0
    inv = inversion_multiplier(spec.err, s)

    if spec.op.translation_invariant:
        full = spec.op.adjoint_symbol(s) * inv
        q = min(kernel.smoothness, int(math.floor(spec.total_order + 1e-12)))
        base = sfft.fft(sample_midpoint(kernel_derivative(kernel, q), x))
        reduced = np.zeros(size, dtype=complex)
        reduced[nonzero] = full[nonzero] / signed_power(s[nonzero], q, "+")
        spectrum = h ** (-q) * reduced * base
        spectrum[~nonzero] = full[~nonzero] * np.sum(kernel(x))
    else:
        q = 0
        physical = adjoint_apply(spec.op, ScaledKernel(kernel, t, h))
        base = sfft.fft(physical(t + h * x))
        reduced = inv
        spectrum = reduced * base

    _check_aliasing(reduced, base, xi, h ** (-q), spectrum)
    # drop the unpaired Nyquist bin so real inputs stay real
    spectrum[size // 2] = 0.0
    values = sfft.ifft(spectrum)
    return GridFunction(t + h * x[0], grid_step, values)


def _check_aliasing(reduced, base, xi, scale, spectrum) -> None:
    # remainder after the band-edge multiplier value, which acts exactly on samples
    top = np.max(np.abs(xi))
    edge_pos = reduced[np.argmax(xi)]
    edge_neg = reduced[np.argmin(xi)]
    edge = np.where(xi > 0, edge_pos, edge_neg)
    remainder = scale * (reduced - edge) * base
    upper = np.abs(xi) > top / 2
    total = np.sum(np.abs(spectrum) ** 2)
    if total == 0:
        return
    fraction = np.sum(np.abs(remainder[upper]) ** 2) / total
    if fraction > ALIASING_TOLERANCE:
        raise ResolutionError(
            f"{100 * fraction:.1f}% of the multiplier-weighted spectrum sits near the Nyquist "
            "frequency; use a finer grid step"
        )


class TestFunctionBank:
    """v_{t,h} for one configuration, cached per scale when translation invariant."""

    def __init__(self, config: MultiscaleConfig, step: float):
        self.config = config
        self.spec = config.problem
        self.kernel = config.kernel
        self.step = step
        self.closed = has_closed_form(self.spec, self.kernel)
        self.variable_exact = has_exact_variable_form(self.spec, self.kernel)
        self._grid_cache: Dict[float, GridFunction] = {}
        self._closed_cache: Dict[float, ClosedFormV] = {}

    def at(self, t: float, h: float):
        if self.closed:
            if h not in self._closed_cache:
                self._closed_cache[h] = v_closed_form(self.spec, self.kernel, 0.0, h)
            return ClosedFormV(t, h, self._closed_cache[h].terms)
        if self.variable_exact:
            return v_variable_polynomial(self.spec, self.kernel, t, h)
        if self.spec.op.translation_invariant:
            base = self.unit_grid(h)
            return GridFunction(base.origin + t, base.step, base.samples)
        return self._refined_fourier(t, h)

    def fourier_step(self, h: float) -> float:
        """Grid step for FFT-computed v_{t,h}; never coarser than the bank step."""
        return min(self.step, h / FOURIER_POINTS_PER_SCALE)

    def _refined_fourier(self, t: float, h: float) -> GridFunction:
        step = self.fourier_step(h)
        for halvings in range(MAX_REFINEMENTS + 1):
            try:
                return v_fourier(self.spec, self.kernel, t, h, step, self.config.domain_halfwidth)
            except ResolutionError:
                if halvings == MAX_REFINEMENTS:
                    raise
                logger.debug("refining the Fourier grid for h=%g to step %g", h, step / 2)
                step /= 2

    def unit_grid(self, h: float) -> GridFunction:
        """v_{0,h} on its grid."""
        if h not in self._grid_cache:
            self._grid_cache[h] = self._refined_fourier(0.0, h)
        return self._grid_cache[h]

    @staticmethod
    def support(v) -> Tuple[float, float]:
        if isinstance(v, ClosedFormV):
            return v.support
        return (v.origin, v.origin + v.step * (len(v) - 1))

    def norm(self, t: float, h: float) -> float:
        v = self.at(t, h)
        return v.norm() if isinstance(v, ClosedFormV) else v.l2_norm()


def principal_norm(spec: ProblemSpec, kernel: Kernel, t, h) -> np.ndarray:
    """V^P = h^(1/2 - m - r) |A a_P(t)| ||D^(r+m) phi||_2."""
    spec.require_principal()
    order = spec.total_order
    return (
        np.asarray(h, dtype=float) ** (0.5 - order)
        * np.abs(spec.err.A * spec.a_P(t))
        * fractional_norm(kernel, order)
    )


# -- pilot density ------------------------------------------------------------

@dataclass(frozen=True)
class PilotDensity:
    """Gaussian kernel estimate of the observed density, clipped below at ``floor``."""

    data: np.ndarray = field(repr=False)
    bandwidth: float
    floor: float

    def __call__(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty(t.shape)
        for start in range(0, t.size, 256):
            chunk = t[start : start + 256]
            z = (chunk[:, None] - self.data[None, :]) / self.bandwidth
            out[start : start + 256] = stats.norm.pdf(z).mean(axis=1) / self.bandwidth
        return np.maximum(out, self.floor)


def pilot_density(data, bandwidth_rule: Union[str, float] = "silverman", floor: float = 0.05) -> PilotDensity:
    """Pilot estimate of g; default bandwidth 1.06 * sigma_hat * n^(-1/5)."""
    data = np.asarray(data, dtype=float)
    if data.size == 0:
        raise DegenerateDataError("pilot density needs at least one observation")
    if not floor > 0:
        raise ConfigurationError(f"pilot floor must be positive, got {floor}")
    if isinstance(bandwidth_rule, str):
        if bandwidth_rule != "silverman":
            raise ConfigurationError(f"unknown bandwidth rule {bandwidth_rule!r}")
        sigma = float(np.std(data, ddof=1)) if data.size > 1 else 0.0
        if not sigma > 0:
            raise DegenerateDataError("data have zero variance; the pilot bandwidth is undefined")
        bandwidth = 1.06 * sigma * data.size ** (-0.2)
    else:
        bandwidth = float(bandwidth_rule)
        if not bandwidth > 0:
            raise ConfigurationError(f"pilot bandwidth must be positive, got {bandwidth}")
    return PilotDensity(data, bandwidth, floor)


# -- statistics ---------------------------------------------------------------

class SlidingCorrelator:
    """out[..., p] = sum_i template[i] * signal[..., start[p] + i], zero outside the signal."""

    def __init__(self, template: np.ndarray, fft_size: int):
        self.size = fft_size
        self.template_length = len(template)
        self.spectrum = np.conj(sfft.rfft(np.asarray(template, dtype=float), fft_size))

    @staticmethod
    def fft_size(signal_length: int, template_length: int) -> int:
        return sfft.next_fast_len(signal_length + template_length, real=True)

    def __call__(self, signal_spectrum: np.ndarray, start: np.ndarray, signal_length: int) -> np.ndarray:
        start = np.asarray(start)
        # starts past either end would read wrapped-around signal
        inside = (start > -self.template_length) & (start < signal_length)
        corr = sfft.irfft(signal_spectrum * self.spectrum, self.size, axis=-1)
        return np.where(inside, corr[..., start % self.size], 0.0)


def _exact_level(bank: TestFunctionBank, sorted_data: np.ndarray, t_values: np.ndarray, h: float) -> np.ndarray:
    out = np.empty(t_values.size)
    for i, t in enumerate(t_values):
        v = bank.at(float(t), h)
        lo, hi = bank.support(v)
        a = np.searchsorted(sorted_data, lo, side="left")
        b = np.searchsorted(sorted_data, hi, side="right")
        out[i] = np.sum(np.real(v(sorted_data[a:b])))
    return out


def _binned_level(bank: TestFunctionBank, data: np.ndarray, t_values: np.ndarray, h: float) -> np.ndarray:
    step = bank.step
    v = bank.at(0.0, h)
    lo_off, hi_off = bank.support(v)
    i_lo, i_hi = int(math.floor(lo_off / step)), int(math.ceil(hi_off / step))
    offsets = (np.arange(i_lo, i_hi + 1) + 0.5) * step
    template = np.real(v(offsets))
    origin = step * math.floor(data.min() / step)
    count = int(math.ceil((data.max() - origin) / step)) + 1
    counts, _ = np.histogram(data, bins=count, range=(origin, origin + count * step))
    start = np.rint((t_values - origin) / step).astype(int) + i_lo
    correlator = SlidingCorrelator(template, SlidingCorrelator.fft_size(count, template.size))
    return correlator(sfft.rfft(counts.astype(float), correlator.size), start, count)


def _level_statistics(method, bank, data, sorted_data, t_values, h):
    # one binned template serves every location only for translation-invariant operators
    if method == "binned" and bank.spec.op.translation_invariant:
        return _binned_level(bank, data, t_values, h)
    return _exact_level(bank, sorted_data, t_values, h)


def statistics_over_set(data, index_set: ScaleLocationSet, config: MultiscaleConfig, workers: int = 1) -> StatisticTable:
    """T_{t,h}, V_{t,h}, pilot values and calibration terms for every pair of the set."""
    data = np.asarray(data, dtype=float)
    if data.size == 0:
        raise DegenerateDataError("no observations")
    step = config.step_for(index_set)
    bank = TestFunctionBank(config, step)
    pilot = pilot_density(data, config.pilot_bandwidth, config.pilot_floor)
    sorted_data = np.sort(data)
    n = data.size

    levels = index_set.levels()
    T = np.empty(len(index_set))
    V = np.empty(len(index_set))

    def run(level):
        h, idx = level
        sums = _level_statistics(config.method, bank, data, sorted_data, index_set.t[idx], h)
        if config.mode == "principal":
            norms = principal_norm(config.problem, config.kernel, index_set.t[idx], h)
        elif config.problem.op.translation_invariant:
            norms = np.full(idx.size, bank.norm(0.0, h))
        else:
            norms = np.array([bank.norm(float(t), h) for t in index_set.t[idx]])
        return idx, sums, norms

    if workers > 1:
        # warm the per-scale cache before threads share it
        if config.problem.op.translation_invariant:
            for h, _ in levels:
                bank.at(0.0, h)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, levels))
    else:
        results = [run(level) for level in levels]
    for idx, sums, norms in results:
        T[idx] = sums / math.sqrt(n)
        V[idx] = norms

    if np.any(V <= 0):
        raise ResolutionError("a test function has zero norm on the grid")
    logger.info("computed %d local statistics on n=%d observations (%s path)",
                len(index_set), n, "closed-form" if bank.closed or bank.variable_exact else "Fourier")
    return StatisticTable(
        t=index_set.t.copy(),
        h=index_set.h.copy(),
        T=T,
        V=V,
        ghat=pilot(index_set.t),
        w=calibration_weight(index_set.h, config.nu),
        sqrt_term=sqrt_term(index_set.h, config.nu),
        n=n,
        nu=config.nu,
        mode=config.mode,
    )


def multiscale_sup(table: StatisticTable, expectations: Optional[Sequence[float]] = None, nu: Optional[float] = None) -> float:
    """sup over the set of w_h (|T - E T| / (sqrt(g_hat) V) - sqrt(2 log(nu / h)))."""
    if nu is None or nu == table.nu:
        w, root = table.w, table.sqrt_term
    else:
        w, root = calibration_weight(table.h, nu), sqrt_term(table.h, nu)
    centered = table.T if expectations is None else table.T - np.asarray(expectations, dtype=float)
    return float(np.max(w * (np.abs(centered) / (np.sqrt(table.ghat) * table.V) - root)))


def reconstruction(data, config: MultiscaleConfig, h_values: Sequence[float], t_step: float = 0.005) -> List[Tuple[float, np.ndarray, np.ndarray]]:
    """t -> T_{t,h} / (h sqrt(n)) for each requested h, the kernel-estimator view of the statistic."""
    data = np.asarray(data, dtype=float)
    if data.size == 0:
        raise DegenerateDataError("no observations")
    out = []
    for h in h_values:
        if not 0 < h <= 1:
            raise ConfigurationError(f"reconstruction bandwidth must lie in (0, 1], got {h}")
        t = np.arange(0.0, 1.0 - h + 1e-12, t_step)
        index_set = ScaleLocationSet(t, np.full(t.size, float(h)), "custom")
        bank = TestFunctionBank(config, config.step_for(index_set))
        sums = _level_statistics(config.method, bank, data, np.sort(data), t, float(h))
        out.append((float(h), t, sums / (h * data.size)))
    return out
