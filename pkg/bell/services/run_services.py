import logging
import math

from django.conf import settings
from django.core.exceptions import ValidationError

from bell.models import OutputFormat, RunCommand, ScanModel
from bell.services.audit_services import AuditServices
from bell.services.inequality_services import InequalityServices
from bell.services.report_services import ReportServices
from bell.values import RunConfig
from optics.models import StageLabel
from optics.services.stage_services import StageServices
from optics.values import Angle
from pilotwave.services.monte_carlo_services import MAX_SEED, MonteCarloServices
from pilotwave.services.pilot_wave_services import PilotWaveServices
from quantum.services.quantum_services import QuantumServices

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVARIANT_FAILURE = 1
EXIT_USAGE = 2


class RunServices:
    """
    Executes one command-line run and renders its document.
    """

    @classmethod
    def validate(cls, config: RunConfig) -> None:
        """
        Reject configurations that cannot run.

        :param config: Parsed run configuration.
        :type config: RunConfig
        :raises ValidationError: On any invalid field.
        :rtype: None
        """
        if config.command not in RunCommand.values:
            raise ValidationError(f'Unknown command: {config.command}')
        if config.format not in OutputFormat.values:
            raise ValidationError(f'Unknown format: {config.format}')
        if config.model not in ScanModel.values:
            raise ValidationError(f'Unknown model: {config.model}')
        for name in ('theta_deg', 'phi_deg', 'step_deg'):
            if not math.isfinite(getattr(config, name)):
                raise ValidationError(f'{name} must be finite')
        if not 0 <= config.seed < MAX_SEED:
            raise ValidationError(f'Seed must be in [0, 2^64), got {config.seed}')
        if config.workers < 1:
            raise ValidationError(f'Workers must be at least 1, got {config.workers}')

        uses_trials = config.command in (RunCommand.MC, RunCommand.CHECK) or config.model == ScanModel.MONTE_CARLO
        if uses_trials and config.n < 1:
            raise ValidationError(f'Empty run: trial count must be at least 1, got {config.n}')
        if config.command in (RunCommand.SCAN, RunCommand.CHECK):
            InequalityServices.validate_step_degrees(config.step_deg)
        if config.stage is not None and config.stage not in StageLabel.values:
            raise ValidationError(f'Unknown stage: {config.stage}')

    @classmethod
    def metadata(cls, config: RunConfig) -> dict:
        data = {
            'system': settings.SYSTEM_NAME,
            'command': config.command,
            'seed': config.seed,
            'seed_source': config.seed_source,
        }
        if config.command in (RunCommand.STAGE, RunCommand.MC):
            data.update({'theta_deg': config.theta_deg, 'phi_deg': config.phi_deg})
        if config.command in (RunCommand.SCAN, RunCommand.CHECK):
            data['step_deg'] = config.step_deg
        if config.command == RunCommand.SCAN:
            data['model'] = config.model
        if config.command == RunCommand.MC or config.model == ScanModel.MONTE_CARLO:
            data['n'] = config.n
        return data

    @classmethod
    def _stages(cls, config: RunConfig):
        theta, phi = Angle.from_degrees(config.theta_deg), Angle.from_degrees(config.phi_deg)
        if config.stage:
            return [StageServices.canonical_stage(config.stage, theta, phi)]
        return StageServices.canonical_stages(theta, phi)

    @classmethod
    def run_stage(cls, config: RunConfig) -> tuple[int, str]:
        entries = [
            {
                'label': str(stage.label),
                'quantum': QuantumServices.stage_fraction_qm(stage),
                'pilot_wave': PilotWaveServices.pw_components(stage),
            }
            for stage in cls._stages(config)
        ]
        return EXIT_OK, ReportServices.render_stages(entries, config.format, cls.metadata(config))

    @classmethod
    def run_scan(cls, config: RunConfig) -> tuple[int, str]:
        reports = InequalityServices.scan_grid_degrees(
            config.step_deg,
            model=config.model,
            n=config.n,
            seed=config.seed,
            workers=config.workers,
        )
        return EXIT_OK, ReportServices.render_scan(reports, config.format, cls.metadata(config))

    @classmethod
    def run_mc(cls, config: RunConfig) -> tuple[int, str]:
        results = [
            MonteCarloServices.pw_monte_carlo(stage, config.n, config.seed, workers=config.workers)
            for stage in cls._stages(config)
        ]
        return EXIT_OK, ReportServices.render_mc(results, config.format, cls.metadata(config))

    @classmethod
    def run_check(cls, config: RunConfig) -> tuple[int, str]:
        results = AuditServices.run_suites(
            step_deg=config.step_deg,
            mc_trials=config.n,
            seed=config.seed,
        )
        status = EXIT_OK if all(r.passed for r in results) else EXIT_INVARIANT_FAILURE
        return status, ReportServices.render_check(results, config.format, cls.metadata(config))

    @classmethod
    def run(cls, config: RunConfig) -> tuple[int, str]:
        """
        Validate and execute a run.

        :param config: Run configuration.
        :type config: RunConfig
        :raises ValidationError: If the configuration is invalid.
        :return: Exit status and the rendered document.
        :rtype: tuple[int, str]
        """
        cls.validate(config)
        logger.info('RunServices - %s (seed %s from %s)', config.command, config.seed, config.seed_source)
        handlers = {
            RunCommand.STAGE: cls.run_stage,
            RunCommand.SCAN: cls.run_scan,
            RunCommand.MC: cls.run_mc,
            RunCommand.CHECK: cls.run_check,
        }
        return handlers[RunCommand(config.command)](config)
