import math

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose
from scipy import stats

from sketch_testing.exceptions import ConfigurationError, DimensionError, SingularMatrixError
from sketch_testing.procedures import (
    TestConfig, calibrate, default_thresholds, dense_test, f_cdf, f_sf, lrt_test, make_config,
    q_statistics, run_test, sketch_tests, sparse_statistic, sparse_test,
)
from sketch_testing.sketch import Sketch, TwoSampleData


def _continued_fraction(a, b, x):
    tiny = 1e-300
    c = 1.0
    d = 1.0 - (a + b) * x / (a + 1.0)
    d = 1.0 / (d if abs(d) > tiny else tiny)
    h = d
    for step in range(1, 500):
        m2 = 2 * step
        numerator = step * (b - step) * x / ((a - 1.0 + m2) * (a + m2))
        d = 1.0 + numerator * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + numerator / c
        c = c if abs(c) > tiny else tiny
        h *= d * c
        numerator = -(a + step) * (a + b + step) * x / ((a + m2) * (a + 1.0 + m2))
        d = 1.0 + numerator * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + numerator / c
        c = c if abs(c) > tiny else tiny
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h


def regularized_beta(a, b, x):
    """Independent I_x(a, b) by Lentz's continued fraction."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _continued_fraction(a, b, x) / a
    return 1.0 - math.exp(log_front) * _continued_fraction(b, a, 1.0 - x) / b


def noiseless_null_data():
    X1 = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [2.0, 1.0]])
    X2 = np.array([[1.0, 2.0], [3.0, 0.0], [0.0, 2.0], [1.0, -1.0]])
    beta = np.array([1.0, 2.0])
    return TwoSampleData(X1, X2, X1 @ beta, X2 @ beta)


def gaussian_data(seed, n1=60, n2=50, p=20, delta=None, sigma=1.0):
    rng = np.random.default_rng(seed)
    X1 = rng.standard_normal((n1, p))
    X2 = rng.standard_normal((n2, p))
    beta = rng.standard_normal(p)
    beta2 = beta if delta is None else beta + delta
    return TwoSampleData(
        X1, X2,
        X1 @ beta + sigma * rng.standard_normal(n1),
        X2 @ beta2 + sigma * rng.standard_normal(n2),
    )


class ThresholdTests(SimpleTestCase):

    def test_simulation_thresholds(self):
        omega, tau, eta = default_thresholds(400, 600, sigma_hat=1.0, mode='simulation')
        log_p = math.log(400)
        self.assertAlmostEqual(omega, 2.0 * math.sqrt(log_p))
        self.assertAlmostEqual(tau, log_p)
        self.assertAlmostEqual(eta, 600 + math.sqrt(8 * 600 * log_p) + 4 * log_p)

    def test_theory_thresholds(self):
        omega, tau, eta = default_thresholds(100, 50, k=5, sigma_hat=2.0, epsilon=0.5, mode='theory')
        log_p = math.log(100)
        self.assertAlmostEqual(omega, 2.0 * math.sqrt(4.5 * log_p))
        self.assertAlmostEqual(tau, 4.0 * 5 * log_p)
        self.assertAlmostEqual(eta, 4.0 * (50 + 2 * math.sqrt(2.5 * 50 * log_p) + 3 * log_p))

    def test_theory_mode_needs_k(self):
        with self.assertRaises(ConfigurationError):
            default_thresholds(100, 50, mode='theory')

    def test_epsilon_outside_sparse_range_warns(self):
        with self.assertLogs('sketch_testing.procedures', level='WARNING') as logs:
            default_thresholds(100, 50, k=5, epsilon=2.0, mode='theory')
        self.assertEqual([record.test for record in logs.records], ['sparse'])

    def test_bad_inputs(self):
        with self.assertRaises(ConfigurationError):
            default_thresholds(100, 50, mode='bayes')
        with self.assertRaises(DimensionError):
            default_thresholds(1, 50)
        with self.assertRaises(ConfigurationError):
            default_thresholds(100, 50, sigma_hat=0.0)

    def test_omega_override(self):
        config = make_config(100, 50, 1.0, omega=0.0)
        self.assertEqual(config.omega, 0.0)

    def test_config_validation(self):
        with self.assertRaises(ConfigurationError):
            TestConfig(sigma_hat=1.0, omega=-1.0, tau=1.0, eta=1.0)
        with self.assertRaises(ConfigurationError):
            TestConfig(sigma_hat=1.0, omega=1.0, tau=0.0, eta=1.0)
        with self.assertRaises(ConfigurationError):
            TestConfig(sigma_hat=1.0, omega=1.0, tau=1.0, eta=1.0, mode='bayes')

    def test_mode_is_kept(self):
        config = make_config(100, 50, 1.0, k=3, mode='theory')
        self.assertEqual(config.mode, 'theory')
        self.assertEqual(config.scaled(2.0).mode, 'theory')
        self.assertEqual(config.to_dict()['mode'], 'theory')
        self.assertEqual(make_config(100, 50, 1.0).mode, 'simulation')


class SparseStatisticTests(SimpleTestCase):

    def test_ties_are_kept(self):
        self.assertEqual(sparse_statistic([1.0, -2.0, 0.5], 1.0), 5.0)

    def test_zero_threshold_keeps_everything(self):
        self.assertAlmostEqual(sparse_statistic([1.0, -2.0, 0.5], 0.0), 5.25)

    @settings(max_examples=50, deadline=None)
    @given(
        values=st.lists(st.floats(-10, 10), min_size=1, max_size=30),
        low=st.floats(0, 5),
        gap=st.floats(0, 5),
    )
    def test_non_increasing_in_omega(self, values, low, gap):
        self.assertGreaterEqual(sparse_statistic(values, low), sparse_statistic(values, low + gap))

    def test_zero_norm_columns_get_zero_q(self):
        sketch = Sketch.from_arrays(np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 0.0]]), [1.0, 2.0, 3.0])
        with self.assertLogs('sketch_testing.procedures', level='WARNING') as logs:
            Q = q_statistics(sketch)
        assert_allclose(Q, [3.0 / math.sqrt(2.0), 0.0])
        self.assertEqual(logs.records[0].event, 'zero_norm_columns')


class SketchTestTests(SimpleTestCase):

    def test_noiseless_null_never_rejects(self):
        data = noiseless_null_data()
        config, _ = calibrate(data)
        outcomes = sketch_tests(data, config)
        self.assertFalse(outcomes['sparse'].reject)
        self.assertFalse(outcomes['dense'].reject)

    def test_both_estimators_accept_noiseless_null(self):
        data = noiseless_null_data()
        for estimator in ('sketch', 'pooled'):
            config, _ = calibrate(data, estimator=estimator)
            self.assertFalse(sparse_test(data, config).reject)

    def test_strong_sparse_signal_rejects(self):
        delta = np.zeros(20)
        delta[:2] = 8.0
        data = gaussian_data(5, delta=delta)
        config = make_config(data.p, data.m, 1.0)
        outcome = sparse_test(data, config, seed=1)
        self.assertTrue(outcome.reject)
        self.assertGreaterEqual(outcome.diagnostics['exceedances'], 1)
        self.assertTrue(dense_test(data, config).reject)

    def test_scaling_law(self):
        data = gaussian_data(8, delta=np.full(20, 0.3))
        config, _ = calibrate(data, sigma=1.0)
        base = sketch_tests(data, config, seed=3)
        for factor in (0.01, 7.0):
            scaled = sketch_tests(data.scaled(factor), config.scaled(factor), seed=3)
            for method in ('sparse', 'dense'):
                self.assertEqual(scaled[method].reject, base[method].reject)
                assert_allclose(scaled[method].statistic, factor ** 2 * base[method].statistic, rtol=1e-8)

    def test_calibrate_with_split_returns_remaining_rows(self):
        data = gaussian_data(2)
        config, remaining = calibrate(data, split_fraction=0.2, seed=4)
        self.assertEqual(remaining.n1, 48)
        self.assertEqual(remaining.n2, 40)
        self.assertEqual(config.tau, config.sigma_hat ** 2 * math.log(20))

    def test_calibrate_rejects_unknown_estimator(self):
        with self.assertRaises(ConfigurationError):
            calibrate(noiseless_null_data(), estimator='lasso')

    def test_outcome_serialises(self):
        data = noiseless_null_data()
        config, _ = calibrate(data, sigma=1.0)
        document = sparse_test(data, config).to_dict()
        self.assertEqual(document['method'], 'sparse')
        self.assertEqual(set(document['diagnostics']), {'m', 'p', 'omega', 'exceedances', 'zero_norm_columns'})

    def test_run_test_dispatch(self):
        data = noiseless_null_data()
        with self.assertRaises(ConfigurationError):
            run_test('sparse', data)
        with self.assertRaises(ConfigurationError):
            run_test('ridge', data, make_config(2, 6, 1.0))
        self.assertEqual(run_test('dense', data, make_config(2, 6, 1.0)).method, 'dense')
        self.assertEqual(run_test('lrt', data).method, 'lrt')


class FDistributionTests(SimpleTestCase):

    def test_cdf_matches_incomplete_beta_oracle(self):
        for d1, d2 in ((2, 96), (1, 10), (5, 20), (10, 3)):
            for x in (0.1, 0.5, 1.0, 2.0, 5.0):
                expected = regularized_beta(d1 / 2.0, d2 / 2.0, d1 * x / (d1 * x + d2))
                self.assertAlmostEqual(f_cdf(x, d1, d2), expected, delta=1e-10)

    def test_tail_and_edges(self):
        for x in (0.3, 1.0, 4.0):
            self.assertAlmostEqual(f_cdf(x, 3, 17) + f_sf(x, 3, 17), 1.0, delta=1e-12)
            self.assertAlmostEqual(f_cdf(x, 3, 17), stats.f.cdf(x, 3, 17), delta=1e-10)
        self.assertEqual(f_cdf(0.0, 3, 17), 0.0)
        self.assertEqual(f_sf(math.inf, 3, 17), 0.0)


class LikelihoodRatioTests(SimpleTestCase):

    def test_zero_residuals_convention(self):
        outcome = lrt_test(noiseless_null_data())
        self.assertEqual(outcome.statistic, 0.0)
        self.assertEqual(outcome.p_value, 1.0)
        self.assertFalse(outcome.reject)

    def test_requires_p_below_each_sample_size(self):
        data = gaussian_data(1, n1=30, n2=15, p=15)
        with self.assertRaises(DimensionError):
            lrt_test(data)

    def test_rank_deficient_sample(self):
        rng = np.random.default_rng(0)
        X1 = rng.standard_normal((10, 3))
        X1[:, 2] = X1[:, 0]
        X2 = rng.standard_normal((10, 3))
        with self.assertRaises(SingularMatrixError):
            lrt_test(TwoSampleData(X1, X2, rng.standard_normal(10), rng.standard_normal(10)))

    def test_statistic_and_threshold(self):
        data = gaussian_data(9, n1=40, n2=40, p=3, delta=np.array([2.0, 0.0, 0.0]))
        outcome = lrt_test(data, level=0.05)
        d1, d2 = outcome.diagnostics['df']
        self.assertEqual((d1, d2), (3, 74))
        self.assertAlmostEqual(outcome.threshold, stats.f.isf(0.05, 3, 74))
        self.assertTrue(outcome.reject)
        self.assertAlmostEqual(outcome.p_value, stats.f.sf(outcome.statistic, 3, 74), delta=1e-10)

    def test_level_range(self):
        with self.assertRaises(ConfigurationError):
            lrt_test(noiseless_null_data(), level=1.5)
