"""Unit tests for the Gaussian approximating statistic."""
import math

import numpy as np
import pytest
from scipy import stats

from multiscale_deconv.error_models import ErrorModel
from multiscale_deconv.errors import ConfigurationError
from multiscale_deconv.experiments import fig2, five_number_summary, quantile10k
from multiscale_deconv.gaussian_sim import (
    build_plan,
    circle_median,
    quantile,
    simulate_statistic,
    variance_check,
)
from multiscale_deconv.kernels import kernel_derivative, make_beta_kernel
from multiscale_deconv.operators import derivative, make_problem, polynomial_coefficients, variable_coeff
from multiscale_deconv.primitives import GridFunction
from multiscale_deconv.scenario import reference_scenario
from multiscale_deconv.teststat import DEFAULT_NU, MultiscaleConfig, build_index_set, calibration_weight, sqrt_term


@pytest.fixture
def config():
    spec = make_problem(derivative(1), ErrorModel.laplace(0.075))
    return MultiscaleConfig(problem=spec, kernel=make_beta_kernel(3))


class TestQuantile:
    """Tests for the nearest-rank quantile."""

    def test_nearest_rank(self):
        """{1, ..., 100} at alpha = 0.1 gives 90."""
        estimate = quantile(np.arange(1, 101), 0.1)
        assert estimate.value == 90
        assert estimate.reps == 100

    def test_constant_samples(self):
        """Equal samples give that value with zero standard error."""
        estimate = quantile(np.full(50, -0.3), 0.05)
        assert estimate.value == -0.3
        assert estimate.mc_stderr == 0.0

    def test_order_invariant(self):
        """Shuffling the samples changes nothing."""
        x = np.random.default_rng(0).standard_normal(1000)
        assert quantile(x, 0.1).value == quantile(x[::-1], 0.1).value

    def test_bad_alpha(self):
        """alpha outside (0, 1) raises."""
        with pytest.raises(ConfigurationError):
            quantile(np.arange(10), 1.0)


class TestVarianceCheck:
    """Tests for the white-noise variance identity."""

    def test_indicator(self):
        """Var W(1) = 1."""
        psi = GridFunction(0.0, 1e-3, np.ones(1000))
        assert variance_check(psi, reps=10_000) < 0.05

    def test_kernel_derivative(self):
        """phi_3''' on [t, t + h] has variance h ||phi_3'''||^2."""
        h, step = 0.25, 1.0 / 1024
        x = np.arange(0.0, h, step) + 0.5 * step
        psi = GridFunction(x[0], step, kernel_derivative(make_beta_kernel(3), 3)(x / h))
        assert np.sum(psi.real**2) * step == pytest.approx(h * (120 * math.sqrt(7)) ** 2, rel=1e-3)
        assert variance_check(psi, reps=10_000, seed=1) < 0.05

    def test_scaling(self):
        """Scaling psi by 2 leaves the relative error unchanged."""
        psi = GridFunction(0.0, 1e-2, np.sin(np.linspace(0, np.pi, 100)))
        assert variance_check(psi.scaled(2.0), reps=2000) == pytest.approx(variance_check(psi, reps=2000))


class TestSimulation:
    """Tests for simulate_statistic."""

    def test_single_pair_is_half_normal(self, config):
        """One pair: the normalized sum is |N(0, 1)|."""
        index_set = build_index_set("custom", {"pairs": [[0.25, 0.25]]})
        samples = simulate_statistic(config, index_set, "general", reps=2000, seed=0)
        h = 0.25
        z = samples / float(calibration_weight(h, DEFAULT_NU)) + float(sqrt_term(h, DEFAULT_NU))
        assert np.all(z >= -1e-9)
        assert stats.kstest(z, "halfnorm").pvalue > 1e-3

    @pytest.mark.parametrize("workers", [2, 8])
    def test_deterministic_across_workers(self, config, workers):
        """Worker processes give the same replications as one process."""
        index_set = build_index_set("triangular", {"N": 16, "u": 0.5})
        one = simulate_statistic(config, index_set, "general", reps=80, seed=5, workers=1)
        many = simulate_statistic(config, index_set, "general", reps=80, seed=5, workers=workers)
        np.testing.assert_array_equal(one, many)

    def test_principal_single_pair_is_half_normal(self, config):
        """Principal mode, one pair: the normalized sum is |N(0, 1)|."""
        fine = MultiscaleConfig(problem=config.problem, kernel=config.kernel, grid_step=1.0 / 1024)
        index_set = build_index_set("custom", {"pairs": [[0.25, 0.25]]})
        samples = simulate_statistic(fine, index_set, "principal", reps=2000, seed=6)
        z = samples / float(calibration_weight(0.25, DEFAULT_NU)) + float(sqrt_term(0.25, DEFAULT_NU))
        assert stats.kstest(z, "halfnorm").pvalue > 1e-3

    def test_principal_pairs_exchangeable(self, config):
        """Principal mode: two pairs at different (t, h) share one normalized law."""
        fine = MultiscaleConfig(problem=config.problem, kernel=config.kernel, grid_step=1.0 / 1024)
        z = []
        for seed, (t, h) in enumerate([(0.25, 0.25), (0.5, 0.125)]):
            index_set = build_index_set("custom", {"pairs": [[t, h]]})
            samples = simulate_statistic(fine, index_set, "principal", reps=10_000, seed=seed)
            z.append(samples / float(calibration_weight(h, DEFAULT_NU)) + float(sqrt_term(h, DEFAULT_NU)))
        assert stats.ks_2samp(z[0], z[1]).pvalue > 0.01

    def test_variable_coefficient_operator(self):
        """(1 + x) D with Laplace noise simulates at the default resolution."""
        spec = make_problem(variable_coeff(polynomial_coefficients([[0.0], [1.0, 1.0]])), ErrorModel.laplace(0.075))
        config = MultiscaleConfig(problem=spec, kernel=make_beta_kernel(3))
        samples = simulate_statistic(config, build_index_set("circle", {"K": 8}), "general", reps=64, seed=1)
        assert samples.shape == (64,)
        assert np.all(np.isfinite(samples))

    def test_above_trivial_bound(self, config):
        """No replication lies below the trivial lower bound of the set."""
        index_set = build_index_set("triangular", {"N": 16, "u": 0.5})
        samples = simulate_statistic(config, index_set, "principal", reps=64, seed=2)
        L = np.log(DEFAULT_NU / index_set.h)
        assert np.all(samples >= np.max(-L / np.log(L)) - 1e-9)

    def test_principal_plan_norms(self, config):
        """Principal templates carry the norm sqrt(h) ||phi'''||."""
        index_set = build_index_set("circle", {"K": 4})
        plan = build_plan(config, index_set, "principal")
        level = plan.levels[0]
        assert level.norms[0] == pytest.approx(math.sqrt(0.25) * 120 * math.sqrt(7))

    def test_nonpositive_reps(self, config):
        """reps = 0 raises."""
        with pytest.raises(ConfigurationError):
            simulate_statistic(config, build_index_set("circle", {"K": 2}), reps=0)

    def test_circle_median_trend(self):
        """The exact circle-grid median rises through K = 64, 512, 4096 and stays negative."""
        medians = [circle_median(K, DEFAULT_NU) for K in (64, 512, 4096)]
        assert medians[0] < medians[1] < medians[2] < 0

    def test_circle_median_bracket(self):
        """With nu just above e the K = 4096 median lies in [-0.75, 0.1]."""
        assert -0.75 <= circle_median(4096, math.e + 0.01) <= 0.1

    @pytest.mark.slow
    def test_circle_median_matches_simulation(self, config):
        """Disjoint windows make the simulated median match the exact one."""
        index_set = build_index_set("circle", {"K": 64})
        samples = simulate_statistic(config, index_set, "general", reps=2000, seed=3)
        assert np.median(samples) == pytest.approx(circle_median(64, DEFAULT_NU), abs=0.15)


class TestReproduction:
    """Tests for the reproduction summaries."""

    def test_five_number_summary(self):
        """Whiskers stay inside the data and quartiles are ordered."""
        summary = five_number_summary(np.arange(1.0, 102.0))
        assert summary["min"] <= summary["lower_whisker"] <= summary["q1"]
        assert summary["q1"] <= summary["median"] <= summary["q3"] <= summary["upper_whisker"] <= summary["max"]
        assert summary["median"] == 51.0

    def test_fig2_small(self):
        """One row per sample size with ordered summaries."""
        rows = fig2(reps=64, seed=0, sizes=(200,))
        assert [row["n"] for row in rows] == [200]
        assert rows[0]["q1"] <= rows[0]["median"] <= rows[0]["q3"]

    @pytest.mark.slow
    def test_upper_tail_grows_slowly(self):
        """p99 at n = 10^4 exceeds p99 at n = 200 by less than 1.5."""
        p99 = []
        for n in (200, 10_000):
            scenario = reference_scenario(n, reps=2000)
            samples = simulate_statistic(scenario.config(), scenario.build_index_set(), "principal", 2000, 0, 4)
            p99.append(np.quantile(samples, 0.99))
        assert p99[1] - p99[0] < 1.5

    @pytest.mark.slow
    def test_quantile_10k(self):
        """The 0.9-quantile at n = 10^4 lies in [-0.14, 0.06]."""
        estimate = quantile10k(reps=10_000, seed=0, workers=4)
        assert -0.14 <= estimate.value <= 0.06
        assert estimate.scenario_hash is not None
