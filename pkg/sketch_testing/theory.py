"""
Closed-form constants of the complementary sketch and their empirical checks.

With r = n1 / n2 and s = p / m the sketched Gram matrix behaves like
4 n kappa1 I, where

    kappa1 = r / ((1 + r)^2 (1 + s))

is the limit of mean(lambda (1 - lambda)) over the spectrum of a matrix-variate
Beta(n1 / 2, n2 / 2) matrix, and kappa2^2 is the limit of the mean of its square.
``beta_spectrum`` and ``bartlett_qr_check`` sample the random-matrix laws so
these limits can be checked numerically.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg, stats

from .exceptions import DimensionError, SingularMatrixError
from .simgen import derive_seed
from .sketch import check_seed

logger = logging.getLogger(__name__)


def _check_ratios(r, s):
    if not r > 0 or not s > 0:
        raise DimensionError(f'ratios must be positive, got r = {r}, s = {s}')


def kappa1(r, s):
    _check_ratios(r, s)
    return r / ((1.0 + r) ** 2 * (1.0 + s))


def kappa2(r, s):
    _check_ratios(r, s)
    numerator = r * (r + s - r * s + r ** 2 * s + r * s ** 2)
    return math.sqrt(numerator / ((1.0 + r) ** 4 * (1.0 + s) ** 3))


def limit_ratios(r, s):
    """Limits (xi, eta) of p / n1 and p / n2."""
    _check_ratios(r, s)
    return (s + s * r) / (r + s * r), (s + s * r) / (1.0 + s)


def spectral_support(r, s):
    """Edges (t_left, t_right) of the continuous part of the limiting Beta spectrum."""
    xi, eta = limit_ratios(r, s)
    root = math.sqrt(max(xi - xi * eta + eta, 0.0))
    centre = (xi + eta) * eta + xi * eta * (xi - eta)
    spread = 2.0 * xi * eta * root
    scale = (xi + eta) ** 2
    return (centre - spread) / scale, (centre + spread) / scale


def kappa1_from_support(r, s):
    """kappa1 as the integral of t (1 - t) against the limiting spectral law."""
    xi, eta = limit_ratios(r, s)
    t_left, t_right = spectral_support(r, s)
    return (xi + eta) / (16.0 * xi * eta) * (t_right - t_left) ** 2


def kappa2_from_support(r, s):
    xi, eta = limit_ratios(r, s)
    t_left, t_right = spectral_support(r, s)
    polynomial = (
        8.0 * t_left - 5.0 * t_left ** 2 + 8.0 * t_right
        - 6.0 * t_left * t_right - 5.0 * t_right ** 2
    )
    return math.sqrt((xi + eta) / (256.0 * xi * eta) * (t_right - t_left) ** 2 * polynomial)


@dataclass(frozen=True)
class AsymptoticRegime:
    r: float
    s: float

    def __post_init__(self):
        _check_ratios(self.r, self.s)

    @classmethod
    def from_dimensions(cls, n1, n2, p):
        m = n1 + n2 - p
        if m < 1:
            raise DimensionError(f'n1 + n2 = {n1 + n2} must exceed p = {p}')
        return cls(r=n1 / n2, s=p / m)

    @property
    def kappa1(self):
        return kappa1(self.r, self.s)

    @property
    def kappa2(self):
        return kappa2(self.r, self.s)

    @property
    def support(self):
        return spectral_support(self.r, self.s)


def effective_sample_size(n1, n2, p):
    """n kappa1 = m / (1/r + r + 2): size of the equivalent one-sample problem."""
    return (n1 + n2) * AsymptoticRegime.from_dimensions(n1, n2, p).kappa1


def nu(n1, n2, p, k, rho, sigma):
    """Signal-to-threshold ratio r n rho^2 / (sigma^2 (1 + s) (1 + r)^2 k log p)."""
    if rho == 0:
        return 0.0
    if min(n1, n2, k) <= 0 or not sigma > 0:
        raise DimensionError('nu needs positive n1, n2, k and sigma')
    if p < 2:
        raise DimensionError(f'nu needs p >= 2, got p = {p}')
    regime = AsymptoticRegime.from_dimensions(n1, n2, p)
    r, s, n = regime.r, regime.s, n1 + n2
    return r * n * rho ** 2 / (sigma ** 2 * (1.0 + s) * (1.0 + r) ** 2 * k * math.log(p))


def rho_sparse_upper(n1, n2, p, k, sigma, lambda_lower=1.0):
    """Signal size beyond which the sparse test has asymptotic power one."""
    kappa = AsymptoticRegime.from_dimensions(n1, n2, p).kappa1
    n = n1 + n2
    return math.sqrt(7.0 * sigma ** 2 * k * math.log(p) / (lambda_lower ** 2 * n * kappa))


def rho_dense_upper(n1, n2, p, sigma, lambda_lower=1.0):
    """Signal size beyond which the dense test has asymptotic power one."""
    kappa = AsymptoticRegime.from_dimensions(n1, n2, p).kappa1
    n = n1 + n2
    m = n - p
    return math.sqrt(2.0 * sigma ** 2 * math.sqrt(m * math.log(p)) / (n * kappa * lambda_lower))


def _wishart(df, p, rng):
    if df >= p:
        # scipy samples through the Bartlett decomposition: O(p^2) memory.
        sample = stats.wishart(df=df, scale=np.eye(p)).rvs(random_state=rng)
        return np.atleast_2d(sample)
    gaussian = rng.standard_normal((df, p))
    return gaussian.T @ gaussian


def _inverse_sqrt(S):
    eigenvalues, eigenvectors = linalg.eigh(S)
    top = eigenvalues.max(initial=0.0)
    if top <= 0 or eigenvalues.min() <= np.finfo(float).eps * S.shape[0] * top:
        raise SingularMatrixError('S1 + S2 is numerically singular')
    clipped = np.clip(eigenvalues, 0.0, None)
    return (eigenvectors / np.sqrt(clipped)) @ eigenvectors.T


def beta_spectrum(n1, n2, p, seed=0):
    """
    Sorted eigenvalues of B = (S1 + S2)^{-1/2} S1 (S1 + S2)^{-1/2},
    S_i ~ Wishart(n_i, I_p) independent; all lie in [0, 1].
    """
    if n1 + n2 <= p:
        raise DimensionError(f'n1 + n2 = {n1 + n2} must exceed p = {p}')
    check_seed(seed)
    rng = np.random.default_rng(seed)
    S1 = _wishart(n1, p, rng)
    S2 = _wishart(n2, p, rng)
    root = _inverse_sqrt(S1 + S2)
    B = root @ S1 @ root
    B = (B + B.T) / 2.0
    return np.clip(linalg.eigvalsh(B), 0.0, 1.0)


@dataclass(frozen=True)
class SpectrumReport:
    n1: int
    n2: int
    p: int
    reps: int
    mean_a1: float
    mean_a2: float
    mean_min_eigenvalue: float
    mean_max_eigenvalue: float
    kappa1: float
    kappa2: float
    t_left: float
    t_right: float

    @property
    def kappa1_relative_error(self):
        return abs(self.mean_a1 / self.kappa1 - 1.0)

    @property
    def kappa2_relative_error(self):
        return abs(self.mean_a2 / self.kappa2 - 1.0)

    def to_dict(self):
        return {
            'n1': self.n1, 'n2': self.n2, 'p': self.p, 'reps': self.reps,
            'mean_a1': self.mean_a1, 'kappa1': self.kappa1,
            'mean_a2': self.mean_a2, 'kappa2': self.kappa2,
            'mean_min_eigenvalue': self.mean_min_eigenvalue, 't_left': self.t_left,
            'mean_max_eigenvalue': self.mean_max_eigenvalue, 't_right': self.t_right,
        }


def beta_spectrum_summary(n1, n2, p, reps=20, seed=0):
    """Average ||a||_1 / p and ||a||_2 / sqrt(p), a = lambda (1 - lambda), over replicates."""
    regime = AsymptoticRegime.from_dimensions(n1, n2, p)
    a1, a2, lows, highs = [], [], [], []
    for rep in range(reps):
        spectrum = beta_spectrum(n1, n2, p, seed=derive_seed(seed, rep, 'spectrum'))
        a = spectrum * (1.0 - spectrum)
        a1.append(a.sum() / p)
        a2.append(np.linalg.norm(a) / math.sqrt(p))
        lows.append(spectrum[0])
        highs.append(spectrum[-1])
    t_left, t_right = regime.support
    report = SpectrumReport(
        n1=n1, n2=n2, p=p, reps=reps,
        mean_a1=float(np.mean(a1)),
        mean_a2=float(np.mean(a2)),
        mean_min_eigenvalue=float(np.mean(lows)),
        mean_max_eigenvalue=float(np.mean(highs)),
        kappa1=regime.kappa1,
        kappa2=regime.kappa2,
        t_left=t_left,
        t_right=t_right,
    )
    logger.info(
        'Beta spectrum p=%d: ||a||_1/p=%.4f (kappa1 %.4f), ||a||_2/sqrt(p)=%.4f (kappa2 %.4f)',
        p, report.mean_a1, report.kappa1, report.mean_a2, report.kappa2,
    )
    return report


@dataclass(frozen=True)
class BartlettReport:
    n: int
    p: int
    reps: int
    diagonal_pvalues: tuple
    offdiagonal_pvalue: float
    min_diagonal: float
    max_orthonormality_error: float

    def passed(self, level=0.01):
        return (
            min(self.diagonal_pvalues) > level
            and (math.isnan(self.offdiagonal_pvalue) or self.offdiagonal_pvalue > level)
            and self.min_diagonal >= 0.0
        )

    def to_dict(self):
        return {
            'n': self.n, 'p': self.p, 'reps': self.reps,
            'diagonal_pvalues': list(self.diagonal_pvalues),
            'offdiagonal_pvalue': self.offdiagonal_pvalue,
            'min_diagonal': self.min_diagonal,
            'max_orthonormality_error': self.max_orthonormality_error,
        }


def bartlett_qr_check(n, p, reps=2000, seed=0):
    """
    QR-factorise Gaussian n x p matrices with a non-negative diagonal in R and
    test T_jj^2 ~ chi^2_{n-j+1} and T_jk ~ N(0, 1) (j < k) by Kolmogorov-Smirnov.
    """
    if n < p:
        raise DimensionError(f'need n >= p, got n = {n}, p = {p}')
    check_seed(seed)
    rng = np.random.default_rng(seed)
    squared_diagonals = np.empty((reps, p))
    upper = np.triu_indices(p, k=1)
    off_diagonals = np.empty((reps, len(upper[0])))
    min_diagonal = math.inf
    orthonormality_error = 0.0
    for rep in range(reps):
        Q, R = linalg.qr(rng.standard_normal((n, p)), mode='economic')
        signs = np.where(np.diag(R) < 0, -1.0, 1.0)
        R = signs[:, None] * R
        Q = Q * signs
        diagonal = np.diag(R)
        min_diagonal = min(min_diagonal, float(diagonal.min()))
        orthonormality_error = max(
            orthonormality_error, float(np.abs(Q.T @ Q - np.eye(p)).max()),
        )
        squared_diagonals[rep] = diagonal ** 2
        off_diagonals[rep] = R[upper]

    diagonal_pvalues = tuple(
        float(stats.kstest(squared_diagonals[:, j], stats.chi2(df=n - j).cdf).pvalue)
        for j in range(p)
    )
    if off_diagonals.size:
        offdiagonal_pvalue = float(stats.kstest(off_diagonals.ravel(), 'norm').pvalue)
    else:
        offdiagonal_pvalue = math.nan
    return BartlettReport(
        n=n, p=p, reps=reps,
        diagonal_pvalues=diagonal_pvalues,
        offdiagonal_pvalue=offdiagonal_pvalue,
        min_diagonal=min_diagonal,
        max_orthonormality_error=orthonormality_error,
    )
