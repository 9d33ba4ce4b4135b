"""
Two-sample tests built on the complementary sketch.

``sparse`` hard-thresholds the standardised correlations Q = diag(W'W)^{-1/2} W'Z
and rejects when the retained energy reaches tau; ``dense`` rejects when
||Z||^2 reaches eta; ``lrt`` is the classical F-test comparing pooled and
separate least-squares fits, available only when p < min(n1, n2).
"""
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import linalg, special, stats

from .conf import get_setting
from .exceptions import ConfigurationError, DimensionError, SingularMatrixError
from .sketch import complementary_sketch, numerical_rank
from .variance import (
    pooled_sigma2, pooled_sigma2_from_samples, sketch_sigma2, split_sample,
)

logger = logging.getLogger(__name__)

METHODS = ('sparse', 'dense', 'lrt')
MODES = ('simulation', 'theory')
ESTIMATORS = ('sketch', 'pooled')

# Column norms below this fraction of the largest carry no information about theta.
ZERO_NORM_FRACTION = 1e-10


@dataclass(frozen=True)
class TestConfig:
    """Tuning parameters: noise scale, hard threshold and the two rejection levels."""
    sigma_hat: float
    omega: float
    tau: float
    eta: float
    epsilon: float = 0.5
    mode: str = 'simulation'

    def __post_init__(self):
        if not self.sigma_hat > 0:
            raise ConfigurationError(f'sigma_hat must be positive, got {self.sigma_hat}')
        if not self.omega >= 0:
            raise ConfigurationError(f'omega must be non-negative, got {self.omega}')
        if not self.tau > 0:
            raise ConfigurationError(f'tau must be positive, got {self.tau}')
        if not self.eta > 0:
            raise ConfigurationError(f'eta must be positive, got {self.eta}')
        if not self.epsilon > 0:
            raise ConfigurationError(f'epsilon must be positive, got {self.epsilon}')
        if self.mode not in MODES:
            raise ConfigurationError(f'unknown mode {self.mode!r}; choose from {MODES}')

    def scaled(self, factor):
        """Thresholds for responses multiplied by ``factor``."""
        return TestConfig(
            sigma_hat=self.sigma_hat * factor,
            omega=self.omega * factor,
            tau=self.tau * factor ** 2,
            eta=self.eta * factor ** 2,
            epsilon=self.epsilon,
            mode=self.mode,
        )

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class TestOutcome:
    """Decision record of one test."""
    method: str
    statistic: float
    threshold: float
    reject: bool
    p_value: float = None
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            'method': self.method,
            'statistic': self.statistic,
            'threshold': self.threshold,
            'reject': self.reject,
            'p_value': self.p_value,
            'diagnostics': dict(self.diagnostics),
        }


def default_thresholds(p, m, k=None, sigma_hat=1.0, epsilon=None, mode='simulation'):
    """
    Return ``(omega, tau, eta)``.

    simulation: omega = 2 s sqrt(log p), tau = s^2 log p,
                eta = s^2 (m + sqrt(8 m log p) + 4 log p)
    theory:     omega = s sqrt((4 + eps) log p), tau = s^2 k log p,
                eta = s^2 (m + 2 sqrt((2 + eps) m log p) + 2 (1 + eps) log p)
    """
    if mode not in MODES:
        raise ConfigurationError(f'unknown threshold mode {mode!r}; choose from {MODES}')
    if p < 2:
        raise DimensionError(f'thresholds need p >= 2, got p = {p}')
    if m < 1:
        raise DimensionError(f'thresholds need m >= 1, got m = {m}')
    if not sigma_hat > 0:
        raise ConfigurationError(f'sigma_hat must be positive, got {sigma_hat}')

    log_p = math.log(p)
    variance = sigma_hat ** 2
    if mode == 'simulation':
        omega = 2.0 * sigma_hat * math.sqrt(log_p)
        tau = variance * log_p
        eta = variance * (m + math.sqrt(8.0 * m * log_p) + 4.0 * log_p)
        return omega, tau, eta

    if epsilon is None:
        epsilon = get_setting('DEFAULT_EPSILON')
    if k is None:
        raise ConfigurationError('theory-mode thresholds need the sparsity level k')
    if not 0 < epsilon <= 1:
        logger.warning(
            'epsilon = %s is outside (0, 1] assumed for the sparse threshold', epsilon,
            extra={'event': 'epsilon_out_of_range', 'epsilon': epsilon, 'test': 'sparse'},
        )
    if not 0 < epsilon < 5:
        logger.warning(
            'epsilon = %s is outside (0, 5) assumed for the dense threshold', epsilon,
            extra={'event': 'epsilon_out_of_range', 'epsilon': epsilon, 'test': 'dense'},
        )
    omega = sigma_hat * math.sqrt((4.0 + epsilon) * log_p)
    tau = variance * k * log_p
    eta = variance * (
        m + 2.0 * math.sqrt((2.0 + epsilon) * m * log_p) + 2.0 * (1.0 + epsilon) * log_p
    )
    return omega, tau, eta


def make_config(p, m, sigma_hat, k=None, mode=None, epsilon=None, omega=None):
    """TestConfig with default thresholds; ``omega`` overrides the hard threshold."""
    mode = mode or get_setting('DEFAULT_MODE')
    if epsilon is None:
        epsilon = get_setting('DEFAULT_EPSILON')
    default_omega, tau, eta = default_thresholds(
        p, m, k=k, sigma_hat=sigma_hat, epsilon=epsilon, mode=mode,
    )
    return TestConfig(
        sigma_hat=sigma_hat,
        omega=default_omega if omega is None else omega,
        tau=tau,
        eta=eta,
        epsilon=epsilon,
        mode=mode,
    )


def calibrate(data, sigma=None, k=None, mode=None, epsilon=None, omega=None,
              split_fraction=None, seed=0, estimator=None, sketch=None):
    """
    Build a TestConfig for ``data``.

    ``sigma`` is an oracle noise level; without it sigma is estimated by
    ``estimator``: 'sketch' works on the sketched pair (``sketch`` if already
    computed), 'pooled' averages the per-sample estimates. With
    ``split_fraction`` the pooled estimate comes from held-out rows and the
    remaining rows are returned for testing.
    Returns ``(config, data_to_test)``.
    """
    test_data = data
    if sigma is None:
        estimator = estimator or get_setting('SIGMA_ESTIMATOR')
        if estimator not in ESTIMATORS:
            raise ConfigurationError(f'unknown estimator {estimator!r}; choose from {ESTIMATORS}')
        if split_fraction:
            held_out, test_data = split_sample(data, split_fraction, seed=seed)
            estimate = pooled_sigma2_from_samples(held_out)
        elif estimator == 'sketch':
            if sketch is None:
                sketch = complementary_sketch(data, seed=seed)
            estimate = sketch_sigma2(sketch, reference_energy=float(data.Y @ data.Y) / data.n)
        else:
            estimate = pooled_sigma2(data)
        sigma_hat = estimate.sigma_hat
    else:
        sigma_hat = float(sigma)
    config = make_config(
        test_data.p, test_data.m, sigma_hat, k=k, mode=mode, epsilon=epsilon, omega=omega,
    )
    return config, test_data


def q_statistics(sketch):
    """Q_j = (W'Z)_j / ||W_j||; columns with (numerically) zero norm get Q_j = 0."""
    correlations = sketch.W.T @ sketch.Z
    norms = sketch.col_norms
    informative = norms > ZERO_NORM_FRACTION * norms.max(initial=0.0)
    Q = np.zeros_like(correlations)
    Q[informative] = correlations[informative] / norms[informative]
    zero_columns = int(norms.size - np.count_nonzero(informative))
    if zero_columns:
        logger.warning(
            '%d sketched design columns have zero norm; their Q is set to 0', zero_columns,
            extra={'event': 'zero_norm_columns', 'count': zero_columns, 'p': sketch.p},
        )
    return Q


def zero_norm_count(sketch):
    norms = sketch.col_norms
    return int(np.count_nonzero(norms <= ZERO_NORM_FRACTION * norms.max(initial=0.0)))


def sparse_statistic(Q, omega):
    """Sum of Q_j^2 over |Q_j| >= omega (ties kept)."""
    if omega < 0:
        raise ConfigurationError(f'omega must be non-negative, got {omega}')
    Q = np.asarray(Q, dtype=float)
    return float(np.sum(np.where(np.abs(Q) >= omega, Q ** 2, 0.0)))


def sparse_outcome(sketch, config):
    Q = q_statistics(sketch)
    statistic = sparse_statistic(Q, config.omega)
    return TestOutcome(
        method='sparse',
        statistic=statistic,
        threshold=config.tau,
        reject=statistic >= config.tau,
        diagnostics={
            'm': sketch.m,
            'p': sketch.p,
            'omega': config.omega,
            'exceedances': int(np.count_nonzero(np.abs(Q) >= config.omega)),
            'zero_norm_columns': zero_norm_count(sketch),
        },
    )


def dense_outcome(sketch, config):
    statistic = sketch.dense_statistic
    return TestOutcome(
        method='dense',
        statistic=statistic,
        threshold=config.eta,
        reject=statistic >= config.eta,
        diagnostics={'m': sketch.m, 'p': sketch.p},
    )


def sparse_test(data, config, seed=0):
    return sparse_outcome(complementary_sketch(data, seed=seed), config)


def dense_test(data, config, seed=0):
    return dense_outcome(complementary_sketch(data, seed=seed), config)


def sketch_tests(data, config, seed=0, methods=('sparse', 'dense'), sketch=None):
    """Run the sketch-based tests in ``methods`` off a single sketch."""
    if sketch is None:
        sketch = complementary_sketch(data, seed=seed)
    runners = {'sparse': sparse_outcome, 'dense': dense_outcome}
    return {method: runners[method](sketch, config) for method in methods}


def f_cdf(x, d1, d2):
    """CDF of the F(d1, d2) law through the regularised incomplete beta function."""
    if x <= 0:
        return 0.0
    if math.isinf(x):
        return 1.0
    return float(special.betainc(d1 / 2.0, d2 / 2.0, d1 * x / (d1 * x + d2)))


def f_sf(x, d1, d2):
    """Upper tail 1 - f_cdf, evaluated without cancellation."""
    if x <= 0:
        return 1.0
    if math.isinf(x):
        return 0.0
    return float(special.betainc(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * x)))


def _residual_sum_of_squares(X, Y):
    coefficients, _, _, _ = linalg.lstsq(X, Y)
    residuals = Y - X @ coefficients
    return float(residuals @ residuals)


def lrt_test(data, level=None):
    """Classical F-test of b1 = b2 for p < min(n1, n2)."""
    if level is None:
        level = get_setting('LRT_LEVEL')
    if not 0 < level < 1:
        raise ConfigurationError(f'level must lie in (0, 1), got {level}')
    p = data.p
    if p >= min(data.n1, data.n2):
        raise DimensionError(
            f'the likelihood ratio test needs p < min(n1, n2); got p = {p}, '
            f'n1 = {data.n1}, n2 = {data.n2}'
        )
    for name, X in (('X1', data.X1), ('X2', data.X2)):
        if numerical_rank(X) < p:
            raise SingularMatrixError(f'{name} is rank deficient; the separate fit is not unique')

    rss_separate = (
        _residual_sum_of_squares(data.X1, data.Y1) + _residual_sum_of_squares(data.X2, data.Y2)
    )
    rss_pooled = _residual_sum_of_squares(data.X, data.Y)
    d1, d2 = p, data.n - 2 * p

    tolerance = 1e-20 * max(float(data.Y @ data.Y), np.finfo(float).tiny)
    if rss_separate <= tolerance:
        if rss_pooled - rss_separate <= tolerance:
            statistic, p_value = 0.0, 1.0
        else:
            statistic, p_value = math.inf, 0.0
    else:
        statistic = (max(rss_pooled - rss_separate, 0.0) / d1) / (rss_separate / d2)
        p_value = f_sf(statistic, d1, d2)

    return TestOutcome(
        method='lrt',
        statistic=statistic,
        threshold=float(stats.f.isf(level, d1, d2)),
        reject=p_value <= level,
        p_value=p_value,
        diagnostics={
            'm': data.m,
            'p': p,
            'level': level,
            'df': [d1, d2],
            'rss_pooled': rss_pooled,
            'rss_separate': rss_separate,
        },
    )


def run_test(method, data, config=None, seed=0, level=None):
    """Dispatch on ``method``; the sketch tests need ``config``."""
    if method == 'lrt':
        return lrt_test(data, level=level)
    if method not in METHODS:
        raise ConfigurationError(f'unknown method {method!r}; choose from {METHODS}')
    if config is None:
        raise ConfigurationError(f'the {method} test needs a TestConfig')
    if method == 'sparse':
        return sparse_test(data, config, seed=seed)
    return dense_test(data, config, seed=seed)

