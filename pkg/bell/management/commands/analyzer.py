import os
import tempfile
from pathlib import Path

from django.conf import settings
from django.core.exceptions import ValidationError
from django.core.management import BaseCommand, CommandError

from bell.models import OutputFormat, RunCommand, ScanModel, SeedSource
from bell.services.run_services import EXIT_OK, EXIT_USAGE, RunServices
from bell.values import RunConfig

DEFAULT_TRIALS = 100000


class Command(BaseCommand):
    help = 'Simulate the five-loop experiment and audit the Bell-inequality derivation'

    def add_arguments(self, parser):
        subparsers = parser.add_subparsers(dest='run_command', required=True)

        for name, help_text in (
            (RunCommand.STAGE, 'Quantum and pilot-wave fractions of the three stages'),
            (RunCommand.SCAN, 'Every inequality quantity over an angle grid'),
            (RunCommand.CHECK, 'Run the invariant suite; exits 1 on any failure'),
            (RunCommand.MC, 'Monte Carlo trajectory counts'),
        ):
            sub = subparsers.add_parser(str(name), help=help_text)
            sub.add_argument('--theta-deg', type=float, default=30.0, help='Middle-loop axis in degrees')
            sub.add_argument('--phi-deg', type=float, default=60.0, help='Last-loop axis in degrees')
            sub.add_argument('--step-deg', type=float, default=1.0, help='Grid step in degrees')
            sub.add_argument(
                '--model',
                choices=ScanModel.values,
                default=ScanModel.CLOSED_FORM,
                help='Fractions from closed forms or from Monte Carlo frequencies (scan only)',
            )
            sub.add_argument('--n', type=int, default=None, help='Trials per Monte Carlo run')
            sub.add_argument('--seed', type=int, default=None, help='Run seed (overrides LOOPBELL_SEED)')
            sub.add_argument(
                '--workers',
                type=int,
                default=settings.MC_WORKERS,
                help='Monte Carlo chunks; results do not depend on it',
            )
            sub.add_argument(
                '--stage',
                choices=['stage1', 'stage2', 'stage3'],
                default=None,
                help='Restrict stage and mc to one stage',
            )
            sub.add_argument('--format', choices=OutputFormat.values, default=OutputFormat.CSV)
            sub.add_argument('--output', default=None, help='Write to this path instead of standard output')

    def _config(self, options) -> RunConfig:
        if options['seed'] is not None:
            seed, seed_source = options['seed'], SeedSource.CLI
        elif settings.DEFAULT_SEED_FROM_ENV:
            seed, seed_source = settings.DEFAULT_SEED, SeedSource.ENV
        else:
            seed, seed_source = settings.DEFAULT_SEED, SeedSource.DEFAULT

        n = options['n']
        if n is None:
            n = settings.CHECK_MC_TRIALS if options['run_command'] == RunCommand.CHECK else DEFAULT_TRIALS

        return RunConfig(
            command=options['run_command'],
            theta_deg=options['theta_deg'],
            phi_deg=options['phi_deg'],
            step_deg=options['step_deg'],
            model=options['model'],
            n=n,
            seed=seed,
            seed_source=str(seed_source),
            workers=options['workers'],
            stage=options['stage'].upper() if options['stage'] else None,
            format=options['format'],
            output=options['output'],
        )

    def _write(self, path: str, document: str) -> None:
        # Render first, then swap in a complete file.
        target = Path(path)
        fd, tmp = tempfile.mkstemp(dir=target.parent or Path('.'), prefix=f'.{target.name}.')
        try:
            with os.fdopen(fd, 'w', encoding='utf-8', newline='') as handle:
                handle.write(document)
            os.replace(tmp, target)
        except Exception:
            Path(tmp).unlink(missing_ok=True)
            raise

    def handle(self, *args, **options):
        config = self._config(options)
        try:
            status, document = RunServices.run(config)
        except ValidationError as ex:
            message = ', '.join(ex.messages) if hasattr(ex, 'messages') else str(ex)
            raise CommandError(message, returncode=EXIT_USAGE)

        if config.output:
            try:
                self._write(config.output, document)
            except OSError as ex:
                raise CommandError(f'Cannot write {config.output}: {ex.strerror or ex}', returncode=EXIT_USAGE)
            if status == EXIT_OK:
                self.stderr.write(self.style.SUCCESS(f'Wrote {config.command} output to {config.output}'))
        else:
            self.stdout.write(document, ending='')

        if status != EXIT_OK:
            raise CommandError('Invariant suite failed', returncode=status)
