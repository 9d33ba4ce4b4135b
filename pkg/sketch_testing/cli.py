"""`compsketch` console entry point: runs the management command and returns its exit code."""
import os
import sys

import django
from django.core.management import call_command
from django.core.management.base import CommandError


def cli_main(argv=None, stdout=None, stderr=None):
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'CompSketch.settings')
    django.setup()
    argv = sys.argv[1:] if argv is None else list(argv)
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        call_command('compsketch', *argv, stdout=stdout, stderr=stderr)
    except CommandError as exc:
        stderr.write(f'compsketch: {exc}\n')
        return exc.returncode
    except SystemExit as exc:
        # argparse exits after printing --help.
        return exc.code or 0
    return 0


def main():
    sys.exit(cli_main())


if __name__ == '__main__':
    main()
