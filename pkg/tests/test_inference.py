"""Unit tests for confidence rectangles and qualitative statements."""
import math

import numpy as np
import pytest

from multiscale_deconv.error_models import ErrorModel
from multiscale_deconv.errors import CalibrationError, ConfigurationError, InvalidQuantileError
from multiscale_deconv.inference import (
    coverage_check,
    detection_boundary,
    detection_implication,
    disjoint_count,
    extract_report,
    halfwidth,
    maximum_intervals,
    minimal_intervals,
    rectangles,
    report_document,
)
from multiscale_deconv.kernels import make_beta_kernel
from multiscale_deconv.operators import derivative, make_problem
from multiscale_deconv.primitives import ConfidenceRectangle, QuantileEstimate, StatisticRow, StatisticTable
from multiscale_deconv.teststat import DEFAULT_NU, calibration_weight, principal_norm, sqrt_term


def single_row_table(T, V, h=0.1, t=0.2, ghat=1.0, n=100, mode="general"):
    h_arr = np.array([h])
    return StatisticTable(
        t=np.array([t]), h=h_arr, T=np.array([T]), V=np.array([V]), ghat=np.array([ghat]),
        w=calibration_weight(h_arr), sqrt_term=sqrt_term(h_arr), n=n, nu=DEFAULT_NU, mode=mode,
    )


def rect(t, h, b_minus, b_plus):
    return ConfidenceRectangle(t, h, b_minus, b_plus, d=1.0)


class TestHalfwidth:
    """Tests for halfwidth."""

    def test_zero_quantile(self):
        """q = 0 leaves sqrt(g) V sqrt(2 log(nu / h))."""
        row = StatisticRow(0.2, 0.1, 0.0, 3.0, 0.25, 1.0, 1.0)
        expected = 0.5 * 3.0 * math.sqrt(2 * math.log(DEFAULT_NU / 0.1))
        assert halfwidth(row, 0.0) == pytest.approx(expected, rel=1e-14)

    def test_quantile_correction(self):
        """q scales by 1 + q log log(nu/h) / log(nu/h)."""
        row = StatisticRow(0.2, 0.1, 0.0, 3.0, 0.25, 1.0, 1.0)
        L = math.log(DEFAULT_NU / 0.1)
        assert halfwidth(row, 0.5) / halfwidth(row, 0.0) == pytest.approx(1 + 0.5 * math.log(L) / L)

    def test_principal_norm_replaces_V(self):
        """Principal mode uses |A a_P| h^(1/2 - m - r) ||phi'''||."""
        spec = make_problem(derivative(1), ErrorModel.laplace(0.075))
        kernel = make_beta_kernel(3)
        row = StatisticRow(0.2, 0.1, 0.0, 1.0, 1.0, 1.0, 1.0)
        d = halfwidth(row, 0.0, mode="principal", spec=spec, kernel=kernel)
        V_P = float(principal_norm(spec, kernel, 0.2, 0.1))
        assert d == pytest.approx(V_P * math.sqrt(2 * math.log(DEFAULT_NU / 0.1)))
        assert V_P == pytest.approx(0.075**2 * 0.1 ** (0.5 - 3) * 120 * math.sqrt(7))

    def test_principal_widths_decrease_in_h(self):
        """With g_hat constant, d^P / (h sqrt(n)) decreases over h in [1/251, 1/4]."""
        spec = make_problem(derivative(1), ErrorModel.laplace(0.075))
        kernel = make_beta_kernel(3)
        n = 10_000
        widths = []
        for h in np.linspace(1.0 / 251, 0.25, 400):
            row = StatisticRow(0.3, h, 0.0, 1.0, 1.0, 1.0, 1.0)
            d = halfwidth(row, -0.04, mode="principal", spec=spec, kernel=kernel)
            widths.append(d / (h * math.sqrt(n)))
        assert np.all(np.diff(widths) < 0)

    def test_hash_mismatch(self):
        """A quantile from another scenario is refused."""
        row = StatisticRow(0.2, 0.1, 0.0, 1.0, 1.0, 1.0, 1.0)
        q = QuantileEstimate(alpha=0.1, value=0.0, reps=1000, mc_stderr=0.01, scenario_hash="abc")
        with pytest.raises(CalibrationError):
            halfwidth(row, q, expected_hash="def")


class TestRectangles:
    """Tests for rectangles."""

    def test_arithmetic(self):
        """T=5, d=2, h=0.1, n=100 gives [3, 7]."""
        V = 2.0 / math.sqrt(2 * math.log(DEFAULT_NU / 0.1))
        (r,) = rectangles(single_row_table(5.0, V), 0.0)
        assert r.d == pytest.approx(2.0)
        assert r.b_minus == pytest.approx(3.0)
        assert r.b_plus == pytest.approx(7.0)
        assert r.b_minus <= r.b_plus

    def test_boundary_of_decrease(self):
        """T = -d gives b_plus = 0 exactly."""
        d = rectangles(single_row_table(0.0, 1.0), 0.2)[0].d
        (r,) = rectangles(single_row_table(-d, 1.0), 0.2)
        assert r.b_plus == 0.0

    def test_mode_mismatch(self):
        """Principal quantiles do not apply to general statistics."""
        with pytest.raises(CalibrationError):
            rectangles(single_row_table(1.0, 1.0), 0.0, mode="principal")


class TestIntervals:
    """Tests for minimal_intervals and disjoint_count."""

    def test_containment_pruning(self):
        """[0.1, 0.5] contains [0.2, 0.3] and is dropped."""
        assert minimal_intervals([(0.1, 0.5), (0.2, 0.3)]) == [(0.2, 0.3)]

    def test_duplicates_kept_once(self):
        """Equal intervals do not eliminate each other."""
        assert minimal_intervals([(0.1, 0.2), (0.1, 0.2), (0.3, 0.4)]) == [(0.1, 0.2), (0.3, 0.4)]

    def test_touching_intervals_overlap(self):
        """Closed intervals sharing an end point are not disjoint."""
        assert disjoint_count([(0.0, 1.0), (1.0, 2.0)]) == 1
        assert disjoint_count([(0.0, 1.0), (1.5, 2.0), (0.2, 0.3)]) == 2


class TestReport:
    """Tests for extract_report."""

    def test_empty(self):
        """No signed rectangles, no statements."""
        report = extract_report([rect(0.1, 0.2, -1.0, 1.0)], 0.1)
        assert report.increases == [] and report.decreases == []
        assert report.root_intervals == []
        assert report.mode_count_lower_bound == 0

    def test_one_maximum(self):
        """An increase on [0.1, 0.3] then a decrease on [0.4, 0.6] give one root in [0.1, 0.6]."""
        report = extract_report([rect(0.1, 0.2, 0.5, 2.0), rect(0.4, 0.2, -2.0, -0.5)], 0.1)
        assert len(report.root_intervals) == 1
        np.testing.assert_allclose(report.root_intervals[0], (0.1, 0.6))
        assert report.root_kinds == ["maximum"]
        assert report.mode_count_lower_bound == 1
        assert report.maxima_lower_bound == 1

    def test_minimum_then_maximum(self):
        """decrease, increase, decrease: one root pair for the minimum, and the maximum still counts."""
        rects = [
            rect(0.0, 0.1, -2.0, -1.0),
            rect(0.3, 0.1, 1.0, 2.0),
            rect(0.6, 0.1, -2.0, -1.0),
        ]
        report = extract_report(rects, 0.1)
        assert report.root_kinds == ["minimum"]
        assert report.maxima_lower_bound == 1
        assert report.mode_count_lower_bound == 1

    def test_maximum_intervals_span(self):
        """The maximum after a leading decrease spans [0.3, 0.7]."""
        signed = [((0.0, 0.1), -1), ((0.3, 0.4), +1), ((0.6, 0.7), -1)]
        assert maximum_intervals(signed) == [(0.3, 0.7)]

    def test_decrease_before_increase_is_no_maximum(self):
        """dec then inc alone bounds no maximum."""
        rects = [rect(0.0, 0.1, -2.0, -1.0), rect(0.3, 0.1, 1.0, 2.0)]
        assert extract_report(rects, 0.1).maxima_lower_bound == 0

    def test_alternating_pairs(self):
        """inc, dec, inc, dec pairs into two maxima."""
        rects = [
            rect(0.0, 0.1, 1.0, 2.0),
            rect(0.2, 0.1, -2.0, -1.0),
            rect(0.5, 0.1, 1.0, 2.0),
            rect(0.7, 0.1, -2.0, -1.0),
        ]
        report = extract_report(rects, 0.1)
        assert report.root_kinds == ["maximum", "maximum"]
        assert report.maxima_lower_bound == 2

    def test_document(self):
        """The JSON document carries the rectangles and the bounds."""
        rects = [rect(0.1, 0.2, 0.5, 2.0), rect(0.4, 0.2, -2.0, -0.5)]
        report = extract_report(rects, 0.1, {"n": 2})
        document = report_document(report, rects, DEFAULT_NU, "general", "abc")
        assert document["mode_count_lower_bound"] == 1
        assert len(document["rectangles"]) == 2
        assert document["metadata"] == {"n": 2}


class TestDetectionBoundary:
    """Tests for detection_boundary."""

    @pytest.fixture
    def kernel(self):
        return make_beta_kernel(3)

    def test_mode_rate(self, kernel):
        """m = 1, r = 0, beta = 1 localizes at rate 1/5."""
        spec = make_problem(derivative(1), ErrorModel.none())
        boundary = detection_boundary(spec, kernel, 1.0, 0.0, beta=1.0)
        assert boundary.scale_exponent == pytest.approx(1 / 5)
        assert boundary.C_alpha > 0

    def test_inflection_rate(self, kernel):
        """m = 2, r = 0, beta = 1 localizes at rate 1/7."""
        spec = make_problem(derivative(2), ErrorModel.none())
        assert detection_boundary(spec, kernel, 1.0, 0.0, beta=1.0).scale_exponent == pytest.approx(1 / 7)

    def test_constant_signal_regime(self, kernel):
        """beta = 0 gives a signal threshold constant in n."""
        spec = make_problem(derivative(1), ErrorModel.laplace(0.075))
        boundary = detection_boundary(spec, kernel, None, 0.1, beta=0.0)
        np.testing.assert_allclose(boundary.signal_threshold([100, 10_000, 10**6]), 1.0)

    def test_h_min_shrinks(self, kernel):
        """The smallest detectable scale decreases with n."""
        spec = make_problem(derivative(1), ErrorModel.laplace(0.075))
        h = detection_boundary(spec, kernel, None, 0.1, beta=1.0).h_min([1000, 10_000, 100_000])
        assert np.all(np.diff(h) < 0)

    def test_invalid_quantile(self, kernel):
        """1 + q <= 0 raises."""
        spec = make_problem(derivative(1), ErrorModel.laplace(0.075))
        with pytest.raises(InvalidQuantileError):
            detection_boundary(spec, kernel, None, -1.0, beta=1.0)

    def test_unbounded_error_density(self, kernel):
        """Without a finite sup-norm of f_eps there is no boundary."""
        spec = make_problem(derivative(1), ErrorModel.none())
        with pytest.raises(ConfigurationError):
            detection_boundary(spec, kernel, None, 0.0, beta=1.0)


class TestCoverage:
    """Tests for coverage_check and detection_implication."""

    def test_zero_function_covered(self):
        """op(p)f = 0 meets a rectangle straddling 0."""
        assert coverage_check(lambda x: np.zeros_like(x), [rect(0.1, 0.2, -0.5, 0.5)]).tolist() == [True]

    def test_constant_function_missed(self):
        """op(p)f = 1 misses [-2, -1]."""
        assert coverage_check(lambda x: np.ones_like(x), [rect(0.1, 0.2, -2.0, -1.0)]).tolist() == [False]

    def test_varying_function_touches(self):
        """A function crossing the band on [t, t + h] is covered."""
        assert coverage_check(lambda x: 10 * x - 3, [rect(0.2, 0.2, 0.5, 0.8)]).tolist() == [True]

    def test_detection_implication(self):
        """A large signal must be detected with the right sign."""
        strong = ConfidenceRectangle(0.1, 0.2, 1.0, 3.0, d=0.1)
        missed = ConfidenceRectangle(0.1, 0.2, -1.0, 3.0, d=0.1)
        result = detection_implication(lambda x: np.full_like(x, 10.0), [strong, missed], n=100)
        assert result.tolist() == [True, False]
