"""
Noise variance estimation for threshold construction.

Uses the method-of-moments estimator for isotropic Gaussian designs (Dicker, 2014):

    sigma2 = (n + p + 1) / (n (n + 1)) ||Y||^2 - 1 / (n (n + 1)) ||X'Y||^2

The raw value can be negative at small n, so it is floored at a small
fraction of ||Y||^2 / n.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from .conf import get_setting
from .exceptions import DimensionError
from .sketch import TwoSampleData, check_seed

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SigmaEstimate:
    sigma2_hat: float
    per_sample: tuple
    floor_applied: bool

    @property
    def sigma_hat(self):
        return math.sqrt(self.sigma2_hat)


def _moment_estimate(X, Y):
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float).ravel()
    if X.ndim != 2 or X.shape[0] != Y.shape[0]:
        raise DimensionError(
            f'design of shape {X.shape} does not match response of length {Y.shape[0]}'
        )
    n, p = X.shape
    if n < 2:
        raise DimensionError(f'variance estimation needs n >= 2 rows, got {n}')
    response_energy = float(Y @ Y)
    correlation_energy = float(np.sum((X.T @ Y) ** 2))
    raw = ((n + p + 1) * response_energy - correlation_energy) / (n * (n + 1))
    floor = max(get_setting('VARIANCE_FLOOR') * response_energy / n, np.finfo(float).tiny)
    return raw, floor


def dicker_sigma2(X, Y):
    """Floored method-of-moments estimate of the noise variance of ``Y = X b + e``."""
    raw, floor = _moment_estimate(X, Y)
    return max(raw, floor)


def pooled_sigma2_from_samples(samples):
    """Row-count weighted average of per-sample estimates for ``[(X, Y), ...]``."""
    estimates = []
    weights = []
    floor_applied = False
    for X, Y in samples:
        raw, floor = _moment_estimate(X, Y)
        if raw < floor:
            floor_applied = True
            logger.info(
                'Variance estimate %.3g floored at %.3g', raw, floor,
                extra={'event': 'variance_floor', 'raw': raw, 'floor': floor},
            )
        estimates.append(max(raw, floor))
        weights.append(len(Y))
    pooled = float(np.average(estimates, weights=weights))
    return SigmaEstimate(
        sigma2_hat=pooled,
        per_sample=tuple(estimates),
        floor_applied=floor_applied,
    )


def pooled_sigma2(data):
    return pooled_sigma2_from_samples([(data.X1, data.Y1), (data.X2, data.Y2)])


def split_sample(data, fraction, seed=0):
    """
    Hold out a random ``fraction`` of each sample's rows for variance estimation.

    Returns ``(held_out, remaining)`` where ``held_out`` is ``[(X1, Y1), (X2, Y2)]``
    and ``remaining`` is the TwoSampleData left for testing.
    """
    if not 0 < fraction < 1:
        raise DimensionError(f'split fraction must lie in (0, 1), got {fraction}')
    check_seed(seed)
    rng = np.random.default_rng(seed)
    held_out = []
    kept = []
    for X, Y in ((data.X1, data.Y1), (data.X2, data.Y2)):
        order = rng.permutation(len(Y))
        size = max(2, int(math.ceil(fraction * len(Y))))
        if size >= len(Y):
            raise DimensionError(
                f'holding out {size} of {len(Y)} rows leaves nothing to test'
            )
        held, rest = order[:size], order[size:]
        held_out.append((X[held], Y[held]))
        kept.append((X[rest], Y[rest]))
    (X1, Y1), (X2, Y2) = kept
    return held_out, TwoSampleData(X1=X1, X2=X2, Y1=Y1, Y2=Y2)


def sketch_sigma2(sketch, reference_energy=None):
    """
    Moment estimate from the sketched pair (W, Z).

    ``Z = W theta + xi`` no longer involves (b1 + b2) / 2, so the estimate is
    not swamped by a dense nuisance the way the per-sample one is. W is
    rescaled so that its rows have unit average second moment. The floor is
    raised to the floor factor times ``reference_energy`` (normally
    ||Y||^2 / n of the unsketched data) when given, since a noiseless Z carries
    only rounding error.
    """
    if sketch.m < 2:
        raise DimensionError(f'variance estimation needs m >= 2 sketched rows, got {sketch.m}')
    frobenius = float(np.sum(sketch.col_norms ** 2))
    if frobenius <= 0.0:
        raise DimensionError('the sketched design is identically zero')
    W = sketch.W * math.sqrt(sketch.m * sketch.p / frobenius)
    raw, floor = _moment_estimate(W, sketch.Z)
    if reference_energy is not None:
        floor = max(floor, get_setting('VARIANCE_FLOOR') * reference_energy)
    if raw < floor:
        logger.info(
            'Sketch variance estimate %.3g floored at %.3g', raw, floor,
            extra={'event': 'variance_floor', 'raw': raw, 'floor': floor},
        )
    sigma2_hat = max(raw, floor)
    return SigmaEstimate(sigma2_hat=sigma2_hat, per_sample=(sigma2_hat,), floor_applied=raw < floor)
