"""
Monte Carlo power estimation and the experiment grids built on it.

Each replicate is a pure function of (scenario, replicate index), so
replicates run in any order on ``COMPSKETCH['THREADS']`` worker threads and
the aggregate is a plain count of rejections.
"""
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .conf import get_setting
from .exceptions import (
    ConfigurationError, DimensionError, NumericalError,
    ReplicateBudgetExceeded,
)
from .procedures import METHODS, calibrate, lrt_test, sketch_tests
from .simgen import derive_seed, gen_dataset
from .sketch import complementary_sketch
from .theory import nu as compute_nu

logger = logging.getLogger(__name__)

CSV_COLUMNS = (
    'n1', 'n2', 'p', 'k', 'rho', 'sigma', 'design', 'noise', 'method', 'mode',
    'nu', 'reps', 'power', 'mc_se', 'seed', 'wall_time_ms',
)

PHASE_RHO_GRID = tuple(round(0.2 * step, 10) for step in range(11))

ORACLE = 'oracle'


@dataclass(frozen=True)
class PowerRow:
    n1: int
    n2: int
    p: int
    k: int
    rho: float
    sigma: float
    design: str
    noise: str
    method: str
    mode: str
    nu: float
    reps: int
    power: float
    mc_se: float
    seed: int
    wall_time_ms: int = 0
    rejections: int = field(default=0, compare=False)
    failures: int = field(default=0, compare=False)

    @classmethod
    def from_counts(cls, scenario, method, mode, rejections, reps, failures=0, wall_time_ms=0):
        power = rejections / reps
        return cls(
            n1=scenario.n1,
            n2=scenario.n2,
            p=scenario.p,
            k=scenario.k,
            rho=scenario.rho,
            sigma=scenario.sigma,
            design=scenario.design_kind,
            noise=scenario.noise_kind,
            method=method,
            mode=mode if method != 'lrt' else 'classical',
            nu=scenario_nu(scenario),
            reps=reps,
            power=power,
            mc_se=math.sqrt(power * (1.0 - power) / reps),
            seed=scenario.seed,
            wall_time_ms=wall_time_ms,
            rejections=rejections,
            failures=failures,
        )

    def as_csv_row(self):
        return [getattr(self, column) for column in CSV_COLUMNS]


def scenario_nu(scenario):
    if scenario.rho == 0:
        return 0.0
    if scenario.sigma == 0:
        return math.inf
    return compute_nu(
        scenario.n1, scenario.n2, scenario.p, scenario.k, scenario.rho, scenario.sigma,
    )


def _oracle_sigma(scenario, sigma):
    if sigma == ORACLE:
        return scenario.sigma
    return sigma


def _replicate(scenario, rep_index, methods, config, sigma, mode, epsilon, level, estimator):
    """Reject decisions for one dataset, or the NumericalError it raised, per method."""
    data, _ = gen_dataset(scenario, rep_index)
    decisions = {}
    sketch_methods = [method for method in methods if method != 'lrt']
    if sketch_methods:
        try:
            sketch = complementary_sketch(data, seed=derive_seed(scenario.seed, rep_index, 'sketch'))
            rep_config = config
            if rep_config is None:
                rep_config, _ = calibrate(
                    data, sigma=sigma, k=scenario.k, mode=mode, epsilon=epsilon,
                    estimator=estimator, sketch=sketch,
                )
            outcomes = sketch_tests(data, rep_config, methods=sketch_methods, sketch=sketch)
            for method, outcome in outcomes.items():
                decisions[method] = outcome.reject
        except (NumericalError, np.linalg.LinAlgError) as exc:
            for method in sketch_methods:
                decisions[method] = exc
    if 'lrt' in methods:
        try:
            decisions['lrt'] = lrt_test(data, level=level).reject
        except (NumericalError, np.linalg.LinAlgError) as exc:
            decisions['lrt'] = exc
    return decisions


def estimate_powers(scenario, methods, config=None, reps=None, sigma=None, mode=None,
                    epsilon=None, level=None, workers=None, timings=False, estimator=None):
    """
    Power of every method in ``methods`` on the same ``reps`` datasets.

    ``config`` fixes the sketch-test thresholds, and the rows carry its mode;
    otherwise they are rebuilt per replicate from sigma (a number, ``'oracle'``
    for the scenario's true sigma, or None to estimate it from the data with
    ``estimator``).
    """
    methods = tuple(methods)
    unknown = set(methods) - set(METHODS)
    if unknown:
        raise ConfigurationError(f'unknown methods: {", ".join(sorted(unknown))}')
    if reps is None:
        reps = get_setting('DEFAULT_REPS')
    if reps < 1:
        raise ConfigurationError(f'reps must be at least 1, got {reps}')
    if 'lrt' in methods and scenario.p >= min(scenario.n1, scenario.n2):
        raise DimensionError(
            f'the likelihood ratio test needs p < min(n1, n2); got p = {scenario.p}'
        )
    if config is not None:
        if mode is not None and mode != config.mode:
            raise ConfigurationError(
                f'mode {mode!r} disagrees with the {config.mode!r} thresholds in config'
            )
        mode = config.mode
    mode = mode or get_setting('DEFAULT_MODE')
    workers = workers or get_setting('THREADS')
    sigma = _oracle_sigma(scenario, sigma)

    started = time.perf_counter()

    def run(rep_index):
        return _replicate(
            scenario, rep_index, methods, config, sigma, mode, epsilon, level, estimator,
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(reps)))
    else:
        results = [run(rep_index) for rep_index in range(reps)]
    elapsed_ms = int(round((time.perf_counter() - started) * 1000)) if timings else 0

    budget = get_setting('FAILURE_BUDGET')
    rows = []
    for method in methods:
        decisions = [result[method] for result in results]
        errors = [d for d in decisions if isinstance(d, Exception)]
        if errors:
            logger.warning(
                '%d of %d replicates failed for %s', len(errors), reps, method,
                extra={'event': 'replicate_failures', 'method': method,
                       'failures': len(errors), 'reps': reps},
            )
            if len(errors) >= budget * reps:
                raise ReplicateBudgetExceeded(len(errors), reps, first_error=errors[0])
        rejections = sum(1 for d in decisions if d is True)
        rows.append(PowerRow.from_counts(
            scenario, method, mode, rejections, reps - len(errors),
            failures=len(errors), wall_time_ms=elapsed_ms,
        ))
    logger.info(
        'Estimated power for %s', ', '.join(f'{r.method}={r.power:.3f}' for r in rows),
        extra={'event': 'power_estimated', 'rho': scenario.rho, 'p': scenario.p},
    )
    return rows


def estimate_power(scenario, method, config=None, reps=None, **options):
    return estimate_powers(scenario, [method], config=config, reps=reps, **options)[0]


def phase_transition_grid(base, rho_list=PHASE_RHO_GRID, p_list=None, n1_list=None,
                          reps=None, method='sparse', sigma=ORACLE, **options):
    """
    Power of ``method`` over dimension (``p_list``) or sample-split (``n1_list``,
    keeping n1 + n2 fixed) grids crossed with ``rho_list``; rows carry nu so
    the curves can be overlaid on a shared axis.
    """
    if p_list is not None and n1_list is not None:
        raise ConfigurationError('give either p_list or n1_list, not both')
    if p_list is not None:
        points = [base.replace(p=p) for p in p_list]
    elif n1_list is not None:
        n = base.n1 + base.n2
        points = [base.replace(n1=n1, n2=n - n1) for n1 in n1_list]
    else:
        points = [base]

    rows = []
    for point in points:
        for rho in rho_list:
            scenario = point.replace(rho=rho)
            rows.append(estimate_power(scenario, method, reps=reps, sigma=sigma, **options))
    return rows


def sparsity_levels(p):
    """k in {1, 10, floor(sqrt p), floor(p / 10), p}, deduplicated."""
    levels = {1, 10, int(math.isqrt(p)), max(1, p // 10), p}
    return sorted(k for k in levels if k <= p)


def comparison_rho_grid(n1, n2, p, knots=10):
    """0 followed by a geometric grid up to 20 (p >= max(n1, n2)) or 10."""
    rho_max = 20.0 if p >= max(n1, n2) else 10.0
    grid = np.geomspace(rho_max / 50.0, rho_max, knots)
    return (0.0,) + tuple(float(f'{rho:.6g}') for rho in grid)


def comparison_grid(base, rho_list=None, k_list=None, methods=('sparse', 'dense', 'lrt'),
                    reps=None, sigma=None, **options):
    """
    Compare methods across sparsity levels and signal sizes, on shared datasets.

    sigma is estimated from the data unless given; the likelihood ratio test is
    dropped whenever p >= min(n1, n2).
    """
    if rho_list is None:
        rho_list = comparison_rho_grid(base.n1, base.n2, base.p)
    if k_list is None:
        k_list = sparsity_levels(base.p)
    active = [m for m in methods if m != 'lrt' or base.p < min(base.n1, base.n2)]
    if len(active) < len(methods):
        logger.info('Skipping the likelihood ratio test: p = %d >= min(n1, n2)', base.p)
    if not active:
        return []

    rows = []
    for k in k_list:
        for rho in rho_list:
            scenario = base.replace(k=k, rho=rho)
            rows.extend(estimate_powers(scenario, active, reps=reps, sigma=sigma, **options))
    return rows


MISSPECIFICATIONS = ('correlated', 'rademacher', 'anova', 'heavy_tailed')


def anova_dimension(n1, n2, target=250):
    """Largest p <= target dividing both n1 and n2, or None when only p = 1 does."""
    common = math.gcd(n1, n2)
    for p in range(min(target, common), 1, -1):
        if common % p == 0:
            return p
    return None


def misspecified_scenarios(base, anova_p=250, include=None):
    """
    Correlated, Rademacher and ANOVA designs and t_4 noise built from ``base``.

    Only the names in ``include`` are built. The ANOVA dimension is the largest
    common divisor of n1 and n2 not above ``anova_p``; the ANOVA scenario is
    left out when no such divisor exceeds 1.
    """
    names = MISSPECIFICATIONS if include is None else tuple(include)
    unknown = set(names) - set(MISSPECIFICATIONS)
    if unknown:
        raise ConfigurationError(f'unknown misspecifications: {", ".join(sorted(unknown))}')

    scenarios = {}
    for name in MISSPECIFICATIONS:
        if name not in names:
            continue
        if name == 'correlated':
            scenarios[name] = base.replace(design_kind='gaussian_ar', ar_base=0.5)
        elif name == 'rademacher':
            scenarios[name] = base.replace(design_kind='rademacher')
        elif name == 'heavy_tailed':
            scenarios[name] = base.replace(noise_kind='t4_scaled')
        else:
            p = anova_dimension(base.n1, base.n2, anova_p)
            if p is None:
                logger.warning(
                    'Skipping the ANOVA design: n1 = %d and n2 = %d share no divisor in [2, %d]',
                    base.n1, base.n2, anova_p,
                    extra={'event': 'anova_skipped', 'n1': base.n1, 'n2': base.n2},
                )
                continue
            scenarios[name] = base.replace(design_kind='anova', p=p, k=min(base.k, p))
    return scenarios


def misspecification_grid(base, rho_list, reps=None, methods=('sparse', 'dense'),
                          anova_rho_scale=2.5, include=None, anova_p=250, **options):
    """Rows for each misspecified scenario; the ANOVA grid is stretched by ``anova_rho_scale``."""
    rows = []
    for name, scenario in misspecified_scenarios(base, anova_p=anova_p, include=include).items():
        scale = anova_rho_scale if name == 'anova' else 1.0
        for rho in rho_list:
            rows.extend(estimate_powers(
                scenario.replace(rho=rho * scale), methods, reps=reps, **options,
            ))
    return rows
