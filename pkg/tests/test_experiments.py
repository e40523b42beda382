"""Tests for the reproduction runs."""
import numpy as np
import pytest

from multiscale_deconv.experiments import coverage, coverage_scenario, fig2


class TestCoverage:
    """Tests for the simultaneous coverage experiment."""

    def test_small_run(self):
        """A short run records one entry per replication and the true shape."""
        result = coverage(reps=3, n=500, calibration_reps=200, seed=1)
        assert len(result.per_run) == 3
        assert 0.0 <= result.coverage <= 1.0
        assert result.true_modes == 3
        assert result.true_sign_changes == 5
        assert result.implication_held == 3

    def test_scenario_is_general_mode(self):
        """Coverage runs use quadrature norms at every scale."""
        scenario = coverage_scenario()
        assert scenario.mode == "general"
        assert scenario.mixture().mode_count() == 3

    @pytest.mark.slow
    def test_simultaneous_coverage(self):
        """At alpha = 0.1 every rectangle covers in at least 85% of 300 runs, and no artefacts appear."""
        result = coverage(reps=300, n=2000, alpha=0.1, seed=0, workers=4)
        assert result.coverage >= 0.85
        assert result.no_artefact_rate >= 0.85
        assert result.implication_held == result.reps


class TestFig2:
    """Tests for the boxplot summaries of the Gaussian statistic."""

    @pytest.mark.slow
    def test_concentrated_and_increasing(self):
        """Medians increase with n and no replication exceeds 3."""
        rows = fig2(reps=10_000, seed=0, workers=4)
        medians = [row["median"] for row in rows]
        assert np.all(np.diff(medians) > 0)
        assert max(row["max"] for row in rows) <= 3.0
