"""
Synthetic two-sample regression data.

A ``Scenario`` fixes the design and noise laws, the sizes, the sparsity k and
the signal size rho = ||b2 - b1||_2. ``gen_dataset(scenario, rep_index)`` is a
pure function of its arguments: every random stream is seeded from a hash of
(scenario seed, replicate index, stream tag), so replicates can be produced in
any order or in parallel.
"""
import dataclasses
import hashlib
import json
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .exceptions import ConfigurationError, DimensionError
from .sketch import TwoSampleData

logger = logging.getLogger(__name__)

DESIGN_KINDS = ('gaussian_iid', 'gaussian_ar', 'rademacher', 'anova')
NOISE_KINDS = ('gaussian', 't4_scaled')


def derive_seed(master_seed, index, tag):
    """Stable 64-bit seed for stream ``tag`` of replicate ``index``."""
    digest = hashlib.blake2b(
        f'{master_seed}:{index}:{tag}'.encode('utf-8'), digest_size=8,
    ).digest()
    return int.from_bytes(digest, 'little')


def stream(master_seed, index, tag):
    return np.random.default_rng(derive_seed(master_seed, index, tag))


@dataclass(frozen=True)
class Scenario:
    n1: int
    n2: int
    p: int
    k: int
    rho: float
    sigma: float = 1.0
    design_kind: str = 'gaussian_iid'
    noise_kind: str = 'gaussian'
    seed: int = 0
    ar_base: float = 0.5
    random_support: bool = False
    fixed_truth: bool = False

    def __post_init__(self):
        if self.design_kind not in DESIGN_KINDS:
            raise ConfigurationError(
                f'unknown design_kind {self.design_kind!r}; choose from {DESIGN_KINDS}'
            )
        if self.noise_kind not in NOISE_KINDS:
            raise ConfigurationError(
                f'unknown noise_kind {self.noise_kind!r}; choose from {NOISE_KINDS}'
            )
        if min(self.n1, self.n2, self.p, self.k) < 1:
            raise DimensionError('n1, n2, p and k must be positive integers')
        if self.k > self.p:
            raise DimensionError(f'sparsity k = {self.k} exceeds p = {self.p}')
        if self.n1 + self.n2 <= self.p:
            raise DimensionError(f'n1 + n2 = {self.n1 + self.n2} must exceed p = {self.p}')
        if self.design_kind == 'anova' and (self.n1 % self.p or self.n2 % self.p):
            raise DimensionError(
                f'the ANOVA design needs p = {self.p} to divide n1 = {self.n1} and n2 = {self.n2}'
            )
        if self.rho < 0:
            raise ConfigurationError(f'rho must be non-negative, got {self.rho}')
        if self.sigma < 0:
            raise ConfigurationError(f'sigma must be non-negative, got {self.sigma}')
        if self.design_kind == 'gaussian_ar' and not 0 < self.ar_base < 1:
            raise ConfigurationError(f'ar_base must lie in (0, 1), got {self.ar_base}')

    @property
    def m(self):
        return self.n1 + self.n2 - self.p

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, document):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(document) - names
        if unknown:
            raise ConfigurationError(f'unknown scenario fields: {", ".join(sorted(unknown))}')
        return cls(**document)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class GroundTruth:
    beta1: np.ndarray
    beta2: np.ndarray
    delta: np.ndarray
    theta: np.ndarray

    @property
    def gamma(self):
        return (self.beta1 + self.beta2) / 2.0


def gen_design(kind, n, p, rng, ar_base=0.5):
    if kind == 'gaussian_iid':
        return rng.standard_normal((n, p))
    if kind == 'gaussian_ar':
        covariance = linalg.toeplitz(ar_base ** np.arange(p))
        factor = linalg.cholesky(covariance, lower=True)
        return rng.standard_normal((n, p)) @ factor.T
    if kind == 'rademacher':
        return rng.choice(np.array([-1.0, 1.0]), size=(n, p))
    if kind == 'anova':
        if n % p:
            raise DimensionError(f'the ANOVA design needs p = {p} to divide n = {n}')
        return np.kron(np.eye(p), np.ones((n // p, 1)))
    raise ConfigurationError(f'unknown design kind {kind!r}; choose from {DESIGN_KINDS}')


def gen_truth(p, k, rho, rng, random_support=False):
    """b1 ~ N(0, I_p); b2 = b1 + Delta with Delta uniform on the radius-rho sphere of a k-subset."""
    beta1 = rng.standard_normal(p)
    delta = np.zeros(p)
    if random_support:
        support = np.sort(rng.choice(p, size=k, replace=False))
    else:
        support = np.arange(k)
    direction = rng.standard_normal(k)
    if rho > 0:
        delta[support] = rho * direction / np.linalg.norm(direction)
    beta2 = beta1 + delta
    return GroundTruth(beta1=beta1, beta2=beta2, delta=delta, theta=(beta1 - beta2) / 2.0)


def gen_noise(kind, size, rng):
    if kind == 'gaussian':
        return rng.standard_normal(size)
    if kind == 't4_scaled':
        # t_4 has variance 2.
        return rng.standard_t(4, size) / math.sqrt(2.0)
    raise ConfigurationError(f'unknown noise kind {kind!r}; choose from {NOISE_KINDS}')


def gen_dataset(scenario, rep_index):
    truth_index = 'fixed' if scenario.fixed_truth else rep_index
    truth = gen_truth(
        scenario.p, scenario.k, scenario.rho,
        stream(scenario.seed, truth_index, 'truth'),
        random_support=scenario.random_support,
    )
    X1 = gen_design(
        scenario.design_kind, scenario.n1, scenario.p,
        stream(scenario.seed, rep_index, 'design1'), ar_base=scenario.ar_base,
    )
    X2 = gen_design(
        scenario.design_kind, scenario.n2, scenario.p,
        stream(scenario.seed, rep_index, 'design2'), ar_base=scenario.ar_base,
    )
    noise1 = scenario.sigma * gen_noise(
        scenario.noise_kind, scenario.n1, stream(scenario.seed, rep_index, 'noise1'),
    )
    noise2 = scenario.sigma * gen_noise(
        scenario.noise_kind, scenario.n2, stream(scenario.seed, rep_index, 'noise2'),
    )
    data = TwoSampleData(
        X1=X1, X2=X2, Y1=X1 @ truth.beta1 + noise1, Y2=X2 @ truth.beta2 + noise2,
    )
    return data, truth
