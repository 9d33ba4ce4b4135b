"""
Complementary sketching of two-sample regression data.

Given ``Y1 = X1 b1 + e1`` and ``Y2 = X2 b2 + e2``, an orthonormal basis A of
the orthogonal complement of ``col(X)`` (X the row-concatenation of X1 and X2)
is split into its first n1 rows A1 and last n2 rows A2. The sketch

    Z = A1' Y1 + A2' Y2,    W = A1' X1 - A2' X2

satisfies ``Z = W theta + xi`` with ``theta = (b1 - b2) / 2`` and
``xi ~ N(0, sigma^2 I_m)``: the nuisance ``(b1 + b2) / 2`` is gone.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .conf import get_setting
from .exceptions import (
    ConfigurationError, DimensionError, NumericalError, SingularMatrixError,
)

logger = logging.getLogger(__name__)


def check_seed(seed):
    if seed < 0:
        raise ConfigurationError(f'seed must be non-negative, got {seed}')
    return seed


def _as_matrix(values, name):
    matrix = np.asarray(values, dtype=float)
    if matrix.ndim == 1:
        matrix = matrix.reshape(-1, 1)
    if matrix.ndim != 2:
        raise DimensionError(f'{name} must be a matrix, got {matrix.ndim} dimensions')
    if not np.all(np.isfinite(matrix)):
        raise DimensionError(f'{name} contains non-finite entries')
    return matrix


def _as_vector(values, name):
    vector = np.asarray(values, dtype=float)
    if vector.ndim == 2 and vector.shape[1] == 1:
        vector = vector[:, 0]
    if vector.ndim != 1:
        raise DimensionError(f'{name} must be a vector, got shape {vector.shape}')
    if not np.all(np.isfinite(vector)):
        raise DimensionError(f'{name} contains non-finite entries')
    return vector


@dataclass(frozen=True)
class TwoSampleData:
    """Designs and responses of the two regression samples."""
    X1: np.ndarray
    X2: np.ndarray
    Y1: np.ndarray
    Y2: np.ndarray

    def __post_init__(self):
        X1 = _as_matrix(self.X1, 'X1')
        X2 = _as_matrix(self.X2, 'X2')
        Y1 = _as_vector(self.Y1, 'Y1')
        Y2 = _as_vector(self.Y2, 'Y2')
        if X1.shape[1] != X2.shape[1]:
            raise DimensionError(
                f'X1 has {X1.shape[1]} columns but X2 has {X2.shape[1]}; '
                'both samples must share the same covariates'
            )
        if X1.shape[0] != Y1.shape[0]:
            raise DimensionError(f'X1 has {X1.shape[0]} rows but Y1 has length {Y1.shape[0]}')
        if X2.shape[0] != Y2.shape[0]:
            raise DimensionError(f'X2 has {X2.shape[0]} rows but Y2 has length {Y2.shape[0]}')
        n = X1.shape[0] + X2.shape[0]
        if n - X1.shape[1] <= 0:
            raise DimensionError(
                f'n1 + n2 = {n} must exceed p = {X1.shape[1]} for the two-sample '
                'problem to be testable'
            )
        object.__setattr__(self, 'X1', X1)
        object.__setattr__(self, 'X2', X2)
        object.__setattr__(self, 'Y1', Y1)
        object.__setattr__(self, 'Y2', Y2)

    @property
    def n1(self):
        return self.X1.shape[0]

    @property
    def n2(self):
        return self.X2.shape[0]

    @property
    def n(self):
        return self.n1 + self.n2

    @property
    def p(self):
        return self.X1.shape[1]

    @property
    def m(self):
        return self.n - self.p

    @property
    def X(self):
        return np.vstack([self.X1, self.X2])

    @property
    def Y(self):
        return np.concatenate([self.Y1, self.Y2])

    def scaled(self, factor):
        """Copy with both responses multiplied by ``factor``."""
        return TwoSampleData(self.X1, self.X2, factor * self.Y1, factor * self.Y2)


@dataclass(frozen=True)
class Sketch:
    """The sketched pair (W, Z) with cached column norms of W."""
    W: np.ndarray
    Z: np.ndarray
    m: int
    col_norms: np.ndarray = field(repr=False)

    @classmethod
    def from_arrays(cls, W, Z):
        W = np.asarray(W, dtype=float)
        Z = np.asarray(Z, dtype=float)
        if W.shape[0] != Z.shape[0]:
            raise DimensionError(f'W has {W.shape[0]} rows but Z has length {Z.shape[0]}')
        return cls(W=W, Z=Z, m=W.shape[0], col_norms=np.linalg.norm(W, axis=0))

    @property
    def p(self):
        return self.W.shape[1]

    @property
    def dense_statistic(self):
        return float(self.Z @ self.Z)


def numerical_rank(X, cutoff=None):
    """Number of singular values above ``cutoff`` times the largest one."""
    if cutoff is None:
        cutoff = get_setting('RANK_CUTOFF')
    singular_values = linalg.svdvals(X)
    if singular_values.size == 0 or singular_values[0] == 0.0:
        return 0
    return int(np.count_nonzero(singular_values > cutoff * singular_values[0]))


def null_space_basis(X, seed=0):
    """
    Random orthonormal basis of the orthogonal complement of ``col(X)``.

    A standard Gaussian n x m matrix is projected onto the complement (using
    the left singular vectors of X instead of forming X X^+ explicitly) and
    orthonormalised by QR. For a full column rank X, m = n - p.
    """
    check_seed(seed)
    X = _as_matrix(X, 'X')
    n, p = X.shape
    cutoff = get_setting('RANK_CUTOFF')

    U, singular_values, _ = linalg.svd(X, full_matrices=False)
    if singular_values.size and singular_values[0] > 0.0:
        rank = int(np.count_nonzero(singular_values > cutoff * singular_values[0]))
    else:
        rank = 0
    m = n - rank
    if m < 1:
        raise DimensionError(
            f'the {n}x{p} design has rank {rank}, so its orthogonal complement '
            'is empty (need n1 + n2 > p)'
        )
    if rank < p:
        logger.warning(
            'Design is rank deficient (rank %d < p = %d); sketch dimension is %d',
            rank, p, m,
            extra={'event': 'rank_deficient_design', 'rank': rank, 'p': p, 'n': n, 'm': m},
        )

    column_basis = U[:, :rank]
    max_redraws = get_setting('MAX_REDRAWS')
    for attempt in range(max_redraws):
        rng = np.random.default_rng(seed + attempt)
        projected = rng.standard_normal((n, m))
        # Two projection passes keep A'X at rounding level.
        for _ in range(2):
            projected -= column_basis @ (column_basis.T @ projected)
        A, R = linalg.qr(projected, mode='economic')
        diagonal = np.abs(np.diag(R))
        if diagonal.min() > cutoff * diagonal.max():
            return A
        logger.warning(
            'Projected Gaussian matrix is rank deficient; redrawing with seed %d',
            seed + attempt + 1,
            extra={'event': 'null_space_redraw', 'attempt': attempt + 1, 'seed': seed},
        )
    raise NumericalError(
        f'could not draw a full-rank projection after {max_redraws} attempts'
    )


def complementary_sketch(data, seed=0):
    """Sketch ``data`` into (W, Z); statistics built from it do not depend on ``seed``."""
    A = null_space_basis(data.X, seed=seed)
    A1, A2 = A[:data.n1], A[data.n1:]
    Z = A1.T @ data.Y1 + A2.T @ data.Y2
    W = A1.T @ data.X1 - A2.T @ data.X2
    logger.debug('Sketched n1=%d n2=%d p=%d into m=%d rows', data.n1, data.n2, data.p, A.shape[1])
    return Sketch(W=W, Z=Z, m=A.shape[1], col_norms=np.linalg.norm(W, axis=0))


def _check_invertible(G, name):
    if not np.all(np.isfinite(G)) or np.linalg.cond(G) * np.finfo(float).eps >= 1.0:
        raise SingularMatrixError(f'{name} is numerically singular')


def gram_oracle(X1, X2):
    """Closed form of W'W: 4 G1 (G1 + G2)^{-1} G2 with G_i = X_i' X_i."""
    X1 = _as_matrix(X1, 'X1')
    X2 = _as_matrix(X2, 'X2')
    G1 = X1.T @ X1
    G2 = X2.T @ X2
    G = G1 + G2
    _check_invertible(G, "X'X")
    return 4.0 * G1 @ linalg.solve(G, G2, assume_a='pos')


def decoupled_gram_oracle(X1, X2):
    """
    Same matrix as ``gram_oracle`` written as a sum of two Gram matrices.

    With L = (G1 + G2)^{-1} (G2 - G1), the rewritten designs X1 (L + I) and
    X2 (L - I) contribute separately, which is the form used to decouple the
    two samples.
    """
    X1 = _as_matrix(X1, 'X1')
    X2 = _as_matrix(X2, 'X2')
    G1 = X1.T @ X1
    G2 = X2.T @ X2
    G = G1 + G2
    _check_invertible(G, "X'X")
    L = linalg.solve(G, G2 - G1, assume_a='pos')
    identity = np.eye(X1.shape[1])
    X1_tilde = X1 @ (L + identity)
    X2_tilde = X2 @ (L - identity)
    return X1_tilde.T @ X1_tilde + X2_tilde.T @ X2_tilde
