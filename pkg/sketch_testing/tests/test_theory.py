import math

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings, strategies as st

from sketch_testing.exceptions import ConfigurationError, DimensionError
from sketch_testing.theory import (
    AsymptoticRegime, bartlett_qr_check, beta_spectrum, beta_spectrum_summary,
    effective_sample_size, kappa1, kappa1_from_support, kappa2, kappa2_from_support,
    limit_ratios, nu, rho_dense_upper, rho_sparse_upper, spectral_support,
)

ratios = st.floats(0.05, 20.0)


class ConstantTests(SimpleTestCase):

    def test_known_values(self):
        self.assertAlmostEqual(kappa1(1.0, 4.0), 0.05)
        self.assertAlmostEqual(kappa2(1.0, 1.0) ** 2, 3.0 / 128.0)
        self.assertAlmostEqual(kappa2(2.0, 1.0) ** 2, 14.0 / 648.0)

    def test_support_at_balanced_design(self):
        t_left, t_right = spectral_support(1.0, 4.0)
        self.assertAlmostEqual(t_left, 0.1)
        self.assertAlmostEqual(t_right, 0.9)
        self.assertEqual(limit_ratios(1.0, 1.0), (1.0, 1.0))

    @settings(max_examples=50, deadline=None)
    @given(r=ratios, s=ratios)
    def test_integral_forms_agree(self, r, s):
        self.assertAlmostEqual(kappa1_from_support(r, s), kappa1(r, s), delta=1e-10)
        self.assertAlmostEqual(kappa2_from_support(r, s), kappa2(r, s), delta=1e-9)

    @settings(max_examples=50, deadline=None)
    @given(r=ratios, s=ratios)
    def test_kappa1_symmetric_in_sample_ratio(self, r, s):
        self.assertAlmostEqual(kappa1(r, s), kappa1(1.0 / r, s), delta=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(r=ratios, s=ratios)
    def test_kappa1_peaks_at_balanced_samples(self, r, s):
        self.assertGreaterEqual(kappa1(1.0, s), kappa1(r, s) * (1.0 - 1e-12))

    @settings(max_examples=20, deadline=None)
    @given(r=ratios, s=ratios)
    def test_kappa2_squared_bounded_by_quarter_kappa1(self, r, s):
        self.assertLessEqual(kappa2(r, s) ** 2, kappa1(r, s) / 4.0 * (1.0 + 1e-9))

    def test_ratios_must_be_positive(self):
        with self.assertRaises(DimensionError):
            kappa1(0.0, 1.0)
        with self.assertRaises(DimensionError):
            AsymptoticRegime.from_dimensions(10, 10, 20)

    def test_effective_sample_size(self):
        self.assertAlmostEqual(effective_sample_size(500, 500, 400), 150.0)
        # m / (1/r + r + 2)
        self.assertAlmostEqual(effective_sample_size(200, 800, 400), 600 / (4.0 + 0.25 + 2.0))

    def test_regime_properties(self):
        regime = AsymptoticRegime.from_dimensions(500, 500, 400)
        self.assertEqual(regime.r, 1.0)
        self.assertAlmostEqual(regime.s, 2.0 / 3.0)
        self.assertEqual(regime.support, spectral_support(regime.r, regime.s))


class SignalRatioTests(SimpleTestCase):

    def test_hand_evaluation(self):
        expected = 1000.0 / ((5.0 / 3.0) * 4.0 * 10 * math.log(400))
        self.assertAlmostEqual(nu(500, 500, 400, 10, 1.0, 1.0), expected)
        self.assertAlmostEqual(nu(500, 500, 400, 10, 1.0, 1.0), 2.5035, places=3)

    def test_zero_signal(self):
        self.assertEqual(nu(500, 500, 400, 10, 0.0, 1.0), 0.0)

    def test_quadratic_in_rho(self):
        self.assertAlmostEqual(nu(300, 700, 250, 5, 2.0, 1.5) / nu(300, 700, 250, 5, 1.0, 1.5), 4.0)

    @settings(max_examples=50, deadline=None)
    @given(n1=st.integers(50, 1000), n2=st.integers(50, 1000), p=st.integers(10, 90))
    def test_symmetric_in_sample_sizes(self, n1, n2, p):
        self.assertAlmostEqual(nu(n1, n2, p, 5, 1.3, 0.8), nu(n2, n1, p, 5, 1.3, 0.8), delta=1e-9)

    def test_detection_limits(self):
        kappa = 1.0 / (4.0 * 5.0)
        self.assertAlmostEqual(
            rho_sparse_upper(500, 500, 800, 10, 1.0),
            math.sqrt(7.0 * 10 * math.log(800) / (1000 * kappa)),
        )
        self.assertAlmostEqual(
            rho_dense_upper(500, 500, 800, 2.0),
            math.sqrt(2.0 * 4.0 * math.sqrt(200 * math.log(800)) / (1000 * kappa)),
        )


class SpectrumTests(SimpleTestCase):

    def test_eigenvalues_in_unit_interval(self):
        spectrum = beta_spectrum(40, 30, 25, seed=1)
        self.assertEqual(spectrum.shape, (25,))
        self.assertTrue(np.all((spectrum >= 0.0) & (spectrum <= 1.0)))
        self.assertTrue(np.all(np.diff(spectrum) >= 0.0))

    def test_degrees_of_freedom_below_dimension(self):
        spectrum = beta_spectrum(10, 30, 25, seed=2)
        # S1 has rank 10, so 15 eigenvalues vanish.
        self.assertEqual(int(np.sum(spectrum < 1e-8)), 15)

    def test_needs_more_samples_than_dimension(self):
        with self.assertRaises(DimensionError):
            beta_spectrum(10, 10, 20)

    def test_negative_seed_rejected(self):
        with self.assertRaises(ConfigurationError):
            beta_spectrum(40, 30, 25, seed=-1)

    def test_summary_matches_constants(self):
        report = beta_spectrum_summary(300, 300, 200, reps=20, seed=0)
        self.assertLess(report.kappa1_relative_error, 0.05)
        self.assertLess(report.kappa2_relative_error, 0.05)
        self.assertEqual(report.to_dict()['reps'], 20)


class BartlettTests(SimpleTestCase):

    def test_qr_factors_follow_bartlett_law(self):
        report = bartlett_qr_check(30, 3, reps=2000, seed=0)
        self.assertTrue(report.passed(0.01), report.to_dict())
        self.assertGreaterEqual(report.min_diagonal, 0.0)
        self.assertLess(report.max_orthonormality_error, 1e-12)
        self.assertEqual(len(report.diagonal_pvalues), 3)

    def test_single_column_has_no_off_diagonal(self):
        report = bartlett_qr_check(5, 1, reps=50, seed=1)
        self.assertTrue(math.isnan(report.offdiagonal_pvalue))

    def test_needs_tall_matrices(self):
        with self.assertRaises(DimensionError):
            bartlett_qr_check(2, 3, reps=10)

    def test_negative_seed_rejected(self):
        with self.assertRaisesMessage(ConfigurationError, 'seed must be non-negative'):
            bartlett_qr_check(30, 3, reps=10, seed=-1)
