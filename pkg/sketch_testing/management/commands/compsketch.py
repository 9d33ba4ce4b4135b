import argparse
import io
import json
import logging
from pathlib import Path

from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError
from django.db import DatabaseError, transaction
import numpy as np

from sketch_testing import theory
from sketch_testing.exceptions import ConfigurationError, DimensionError, NumericalError
from sketch_testing.forms import ScenarioForm, TestConfigForm
from sketch_testing.harness import (
    MISSPECIFICATIONS, PHASE_RHO_GRID, estimate_powers, comparison_grid, misspecification_grid,
    phase_transition_grid,
)
from sketch_testing.io import read_two_sample, write_power_rows
from sketch_testing.models import PowerRecord
from sketch_testing.procedures import (
    calibrate, default_thresholds, lrt_test, sketch_tests,
)
from sketch_testing.simgen import DESIGN_KINDS, NOISE_KINDS

logger = logging.getLogger(__name__)

USAGE_ERROR = 1
DATA_ERROR = 2
NUMERICAL_ERROR = 3


def _float_list(text):
    try:
        return [float(item) for item in text.split(',') if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f'expected comma-separated numbers, got {text!r}')


def _int_list(text):
    try:
        return [int(item) for item in text.split(',') if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f'expected comma-separated integers, got {text!r}')


def _form_errors(form):
    parts = []
    for field, messages in form.errors.items():
        text = ' '.join(messages)
        parts.append(text if field == '__all__' else f'{field}: {text}')
    return '; '.join(parts)


class Command(BaseCommand):
    help = 'Two-sample testing of regression coefficients by complementary sketching'

    def add_arguments(self, parser):
        common = argparse.ArgumentParser(add_help=False)
        common.add_argument('--seed', type=int, help='Master seed for every random stream')
        common.add_argument('--reps', type=int, help='Monte Carlo repetitions')
        common.add_argument('--sigma', type=float, help='Oracle noise level; estimated from the data when absent')
        common.add_argument('--mode', choices=['simulation', 'theory'], help='Threshold family')
        common.add_argument('--epsilon', type=float, help='Slack of the theory-mode thresholds')
        common.add_argument('--estimator', choices=['sketch', 'pooled'], help='Noise estimator used when --sigma is absent')
        common.add_argument('--out', help='Write the result to this file instead of stdout')

        grid = argparse.ArgumentParser(add_help=False)
        grid.add_argument('--level', type=float, help='Level of the likelihood ratio test')
        grid.add_argument('--timings', action='store_true', help='Record wall_time_ms (breaks byte-identical output)')
        grid.add_argument('--save', action='store_true', help='Store the rows as PowerRecords')
        grid.add_argument('--label', default='', help='Label stored with --save')

        sizes = argparse.ArgumentParser(add_help=False)
        sizes.add_argument('--n1', type=int, default=500)
        sizes.add_argument('--n2', type=int, default=500)
        sizes.add_argument('--p', type=int, default=400)
        sizes.add_argument('--design', choices=DESIGN_KINDS, default='gaussian_iid')
        sizes.add_argument('--noise', choices=NOISE_KINDS, default='gaussian')

        subparsers = parser.add_subparsers(dest='subcommand', required=True)

        test = subparsers.add_parser('test', parents=[common], help='Test b1 = b2 on CSV data')
        for name in ('x1', 'y1', 'x2', 'y2'):
            test.add_argument(f'--{name}', required=True, help=f'CSV file holding {name.upper()}')
        test.add_argument('--header', action='store_true', help='Skip the first line of every CSV')
        test.add_argument('--methods', nargs='+', choices=['sparse', 'dense', 'lrt'], default=['sparse', 'dense'])
        test.add_argument('--k', type=int, help='Sparsity level for theory-mode thresholds')
        test.add_argument('--omega', type=float, help='Hard threshold override; 0 keeps every coordinate')
        test.add_argument('--split', type=float, help='Fraction of rows held out to estimate sigma')
        test.add_argument('--level', type=float, help='Level of the likelihood ratio test')

        simulate = subparsers.add_parser('simulate', parents=[common, grid], help='Power of one scenario')
        simulate.add_argument('scenario', help='Scenario JSON document, or a path to one')
        simulate.add_argument('--methods', nargs='+', choices=['sparse', 'dense', 'lrt'])

        phase = subparsers.add_parser('phase', parents=[common, grid, sizes], help='Power against nu over p or n1')
        phase.add_argument('--k', type=int, default=10)
        phase.add_argument('--method', choices=['sparse', 'dense'], default='sparse')
        phase.add_argument('--rho-list', type=_float_list, default=list(PHASE_RHO_GRID))
        axis = phase.add_mutually_exclusive_group()
        axis.add_argument('--p-list', type=_int_list)
        axis.add_argument('--n1-list', type=_int_list, help='n1 values; n1 + n2 stays fixed')

        compare = subparsers.add_parser('compare', parents=[common, grid, sizes], help='Methods across sparsity levels')
        compare.add_argument('--rho-list', type=_float_list)
        compare.add_argument('--k-list', type=_int_list)
        compare.add_argument('--methods', nargs='+', choices=['sparse', 'dense', 'lrt'], default=['sparse', 'dense', 'lrt'])

        misspecify = subparsers.add_parser('misspecify', parents=[common, grid, sizes], help='Power under misspecified models')
        misspecify.add_argument('--k', type=int, default=10)
        misspecify.add_argument('--rho-list', type=_float_list, required=True)
        misspecify.add_argument('--methods', nargs='+', choices=['sparse', 'dense'], default=['sparse', 'dense'])
        misspecify.add_argument(
            '--include', nargs='+', choices=MISSPECIFICATIONS,
        )

        theory_parser = subparsers.add_parser('theory', parents=[common, sizes], help='Constants, nu and thresholds')
        theory_parser.add_argument('--k', type=int, default=10)
        theory_parser.add_argument('--rho', type=float, default=1.0)

        spectrum = subparsers.add_parser('spectrum', parents=[common, sizes], help='Beta spectrum and Bartlett checks')
        spectrum.add_argument('--qr-n', type=int, default=30)
        spectrum.add_argument('--qr-p', type=int, default=3)
        spectrum.add_argument('--qr-reps', type=int, default=2000)

    def handle(self, *args, **options):
        subcommand = options['subcommand']
        form = TestConfigForm(
            data={name: options.get(name) for name in TestConfigForm.base_fields if options.get(name) is not None},
            needs_k=subcommand == 'test',
        )
        if not form.is_valid():
            raise CommandError(_form_errors(form), returncode=USAGE_ERROR)

        handler = getattr(self, f'handle_{subcommand}')
        try:
            output = handler(options)
        except ValidationError as exc:
            raise CommandError('; '.join(exc.messages), returncode=DATA_ERROR)
        except DimensionError as exc:
            raise CommandError(str(exc), returncode=DATA_ERROR)
        except ConfigurationError as exc:
            raise CommandError(str(exc), returncode=USAGE_ERROR)
        except (NumericalError, np.linalg.LinAlgError) as exc:
            raise CommandError(str(exc), returncode=NUMERICAL_ERROR)
        self._emit(output, options.get('out'))

    def _emit(self, text, out):
        if out:
            Path(out).write_text(text, encoding='utf-8')
            logger.info('Wrote %s', out)
        else:
            self.stdout.write(text, ending='')

    def _rows_csv(self, rows, options):
        if options.get('save'):
            try:
                with transaction.atomic():
                    PowerRecord.objects.bulk_create(
                        [PowerRecord.from_row(row, label=options['label']) for row in rows]
                    )
            except DatabaseError as exc:
                raise CommandError(
                    f'could not save power records ({exc}); run `manage.py migrate` first',
                    returncode=DATA_ERROR,
                )
            self.stderr.write(self.style.SUCCESS(f'Saved {len(rows)} power records'))
        buffer = io.StringIO()
        write_power_rows(rows, buffer)
        return buffer.getvalue()

    def _grid_options(self, options):
        return {
            'mode': options['mode'],
            'epsilon': options['epsilon'],
            'level': options['level'],
            'timings': options['timings'],
            'estimator': options['estimator'],
        }

    def _base_scenario(self, options, k=1):
        document = {
            'n1': options['n1'],
            'n2': options['n2'],
            'p': options['p'],
            'k': k,
            'rho': 0.0,
            'sigma': options['sigma'] if options['sigma'] is not None else 1.0,
            'design_kind': options['design'],
            'noise_kind': options['noise'],
            'seed': options['seed'] or 0,
        }
        return self._scenario_from(document)

    def _scenario_from(self, document):
        form = ScenarioForm(data=document)
        if not form.is_valid():
            raise CommandError(_form_errors(form), returncode=DATA_ERROR)
        return form.to_scenario()

    def handle_test(self, options):
        data = read_two_sample(
            options['x1'], options['y1'], options['x2'], options['y2'], header=options['header'],
        )
        seed = options['seed'] or 0
        methods = list(dict.fromkeys(options['methods']))
        sketch_methods = [method for method in methods if method != 'lrt']
        document = {'n1': data.n1, 'n2': data.n2, 'p': data.p, 'm': data.m, 'config': None}
        outcomes = {}
        if sketch_methods:
            config, test_data = calibrate(
                data,
                sigma=options['sigma'],
                k=options['k'],
                mode=options['mode'],
                epsilon=options['epsilon'],
                omega=options['omega'],
                split_fraction=options['split'],
                seed=seed,
                estimator=options['estimator'],
            )
            document['config'] = config.to_dict()
            outcomes.update(sketch_tests(test_data, config, seed=seed, methods=sketch_methods))
        if 'lrt' in methods:
            outcomes['lrt'] = lrt_test(data, level=options['level'])
        document['outcomes'] = [outcomes[method].to_dict() for method in methods]
        return json.dumps(document, indent=2) + '\n'

    def handle_simulate(self, options):
        source = options['scenario']
        try:
            text = source if source.lstrip().startswith('{') else Path(source).read_text(encoding='utf-8')
        except OSError as exc:
            raise CommandError(f'cannot read scenario {source}: {exc}', returncode=DATA_ERROR)
        try:
            document = json.loads(text)
        except json.JSONDecodeError as exc:
            raise CommandError(f'scenario is not valid JSON: {exc}', returncode=DATA_ERROR)
        if not isinstance(document, dict):
            raise CommandError('scenario JSON must be an object', returncode=DATA_ERROR)
        if options['seed'] is not None:
            document['seed'] = options['seed']
        scenario = self._scenario_from(document)

        methods = options['methods']
        if methods is None:
            methods = ['sparse', 'dense']
            if scenario.p < min(scenario.n1, scenario.n2):
                methods.append('lrt')
        rows = estimate_powers(
            scenario, list(dict.fromkeys(methods)), reps=options['reps'], sigma=options['sigma'],
            **self._grid_options(options),
        )
        return self._rows_csv(rows, options)

    def handle_phase(self, options):
        base = self._base_scenario(options, k=options['k'])
        rows = phase_transition_grid(
            base,
            rho_list=options['rho_list'],
            p_list=options['p_list'],
            n1_list=options['n1_list'],
            reps=options['reps'],
            method=options['method'],
            sigma=options['sigma'] if options['sigma'] is not None else 'oracle',
            **self._grid_options(options),
        )
        return self._rows_csv(rows, options)

    def handle_compare(self, options):
        base = self._base_scenario(options)
        rows = comparison_grid(
            base,
            rho_list=options['rho_list'],
            k_list=options['k_list'],
            methods=list(dict.fromkeys(options['methods'])),
            reps=options['reps'],
            sigma=options['sigma'],
            **self._grid_options(options),
        )
        return self._rows_csv(rows, options)

    def handle_misspecify(self, options):
        base = self._base_scenario(options, k=options['k'])
        rows = misspecification_grid(
            base,
            options['rho_list'],
            reps=options['reps'],
            methods=list(dict.fromkeys(options['methods'])),
            include=options['include'],
            sigma=options['sigma'],
            **self._grid_options(options),
        )
        return self._rows_csv(rows, options)

    def handle_theory(self, options):
        n1, n2, p, k = options['n1'], options['n2'], options['p'], options['k']
        sigma = options['sigma'] if options['sigma'] is not None else 1.0
        regime = theory.AsymptoticRegime.from_dimensions(n1, n2, p)
        m = n1 + n2 - p
        xi, eta = theory.limit_ratios(regime.r, regime.s)
        t_left, t_right = regime.support
        thresholds = {}
        for mode in ('simulation', 'theory'):
            omega, tau, eta_threshold = default_thresholds(
                p, m, k=k, sigma_hat=sigma, epsilon=options['epsilon'], mode=mode,
            )
            thresholds[mode] = {'omega': omega, 'tau': tau, 'eta': eta_threshold}
        document = {
            'n1': n1, 'n2': n2, 'p': p, 'm': m, 'k': k, 'rho': options['rho'], 'sigma': sigma,
            'r': regime.r,
            's': regime.s,
            'kappa1': regime.kappa1,
            'kappa2': regime.kappa2,
            'nu': theory.nu(n1, n2, p, k, options['rho'], sigma),
            'effective_sample_size': theory.effective_sample_size(n1, n2, p),
            'rho_sparse_upper': theory.rho_sparse_upper(n1, n2, p, k, sigma),
            'rho_dense_upper': theory.rho_dense_upper(n1, n2, p, sigma),
            'xi': xi,
            'eta': eta,
            't_left': t_left,
            't_right': t_right,
            'thresholds': thresholds,
        }
        return json.dumps(document, indent=2) + '\n'

    def handle_spectrum(self, options):
        seed = options['seed'] or 0
        summary = theory.beta_spectrum_summary(
            options['n1'], options['n2'], options['p'], reps=options['reps'] or 20, seed=seed,
        )
        bartlett = theory.bartlett_qr_check(
            options['qr_n'], options['qr_p'], reps=options['qr_reps'], seed=seed,
        )
        spectrum = summary.to_dict()
        spectrum['kappa1_relative_error'] = summary.kappa1_relative_error
        spectrum['kappa2_relative_error'] = summary.kappa2_relative_error
        report = bartlett.to_dict()
        report['passed'] = bartlett.passed()
        return json.dumps({'beta_spectrum': spectrum, 'bartlett': report}, indent=2) + '\n'
