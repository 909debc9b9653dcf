import logging
import math
from typing import Optional

from django.core.exceptions import ValidationError

from bell.models import ScanModel
from bell.values import InequalityReport
from optics.models import Channel
from optics.services.stage_services import StageServices
from optics.values import Angle, FractionReport, TOLERANCE, X, Y
from pilotwave.services.monte_carlo_services import MonteCarloServices
from pilotwave.services.pilot_wave_services import PilotWaveServices
from quantum.services.quantum_services import QuantumServices

logger = logging.getLogger(__name__)

# Right-arm loop positions: x loop, theta loop, phi loop.
X_LOOP, THETA_LOOP, PHI_LOOP = 0, 1, 2
STAGE_INDEX = {'STAGE1': 0, 'STAGE2': 1, 'STAGE3': 2}


class InequalityServices:
    """
    Evaluates the derivation of the Bell inequality from the three stage fractions.

    Each stage's fraction is decomposed within its own stage. The sum of the
    stage-1 and stage-2 theta-phi components is never assumed equal to the
    stage-3 fraction; their difference is reported as the identification gap.
    """

    @classmethod
    def build_report(
        cls,
        theta_deg: float,
        phi_deg: float,
        f1: FractionReport,
        f2: FractionReport,
        f3: FractionReport,
        tolerance: float = TOLERANCE
    ) -> InequalityReport:
        """
        Assemble every equation of the derivation from per-stage reports.

        :param theta_deg: Middle-loop axis in degrees.
        :type theta_deg: float
        :param phi_deg: Last-loop axis in degrees.
        :type phi_deg: float
        :param f1: Stage-1 report, coarse fraction plus components.
        :type f1: FractionReport
        :param f2: Stage-2 report.
        :type f2: FractionReport
        :param f3: Stage-3 report.
        :type f3: FractionReport
        :param tolerance: Slack allowed when judging the inequality.
        :type tolerance: float
        :return: The full report.
        :rtype: InequalityReport
        """
        plus, minus = str(Channel.PLUS), str(Channel.MINUS)

        f1_xtheta_phi = f1.component_sum({THETA_LOOP: plus})
        f1_xthetabar_phi = f1.component_sum({THETA_LOOP: minus})
        f2_ytheta_phi = f2.component_sum({PHI_LOOP: plus})
        f2_ytheta_phibar = f2.component_sum({PHI_LOOP: minus})
        f3_xtheta_phi = f3.component_sum({X_LOOP: plus})
        f3_ytheta_phi = f3.component_sum({X_LOOP: minus})

        eq4_lhs = f1.coarse + f2.coarse
        eq4_rhs = math.fsum([f1_xtheta_phi, f1_xthetabar_phi, f2_ytheta_phi, f2_ytheta_phibar])
        eq5_rhs = math.fsum([f3.coarse, f1_xthetabar_phi, f2_ytheta_phibar])
        eq6_lhs = eq4_lhs
        eq6_rhs = f3.coarse

        return InequalityReport(
            theta=Angle.from_degrees(theta_deg),
            phi=Angle.from_degrees(phi_deg),
            theta_deg=theta_deg,
            phi_deg=phi_deg,
            f1_coarse=f1.coarse,
            f1_xtheta_phi=f1_xtheta_phi,
            f1_xthetabar_phi=f1_xthetabar_phi,
            f2_coarse=f2.coarse,
            f2_ytheta_phi=f2_ytheta_phi,
            f2_ytheta_phibar=f2_ytheta_phibar,
            f3_coarse=f3.coarse,
            f3_xtheta_phi=f3_xtheta_phi,
            f3_ytheta_phi=f3_ytheta_phi,
            eq4_lhs=eq4_lhs,
            eq4_rhs=eq4_rhs,
            eq5_rhs=eq5_rhs,
            eq5_residual=eq4_lhs - eq5_rhs,
            eq6_lhs=eq6_lhs,
            eq6_rhs=eq6_rhs,
            eq6_satisfied=eq6_lhs >= eq6_rhs - tolerance,
            identification_gap=(f1_xtheta_phi + f2_ytheta_phi) - f3.coarse,
            tolerance=tolerance,
        )

    @classmethod
    def stage_reports(cls, theta: Angle, phi: Angle) -> list[FractionReport]:
        """
        Observed quantum fraction of each canonical stage with the pilot-wave components attached.
        """
        reports = []
        for stage in StageServices.canonical_stages(theta, phi):
            components = PilotWaveServices.pw_components(stage).components
            reports.append(FractionReport(
                coarse=QuantumServices.stage_fraction_qm(stage).coarse,
                components=components,
            ))
        return reports

    @classmethod
    def eval_point_degrees(cls, theta_deg: float, phi_deg: float) -> InequalityReport:
        theta, phi = Angle.from_degrees(theta_deg), Angle.from_degrees(phi_deg)
        f1, f2, f3 = cls.stage_reports(theta, phi)
        return cls.build_report(theta_deg, phi_deg, f1, f2, f3)

    @classmethod
    def eval_point(cls, theta: Angle, phi: Angle) -> InequalityReport:
        """
        Closed-form report at one (theta, phi).

        :param theta: Middle-loop axis.
        :type theta: Angle
        :param phi: Last-loop axis.
        :type phi: Angle
        :return: The report.
        :rtype: InequalityReport
        """
        return cls.eval_point_degrees(theta.degrees, phi.degrees)

    @classmethod
    def eval_point_mc(
        cls,
        theta_deg: float,
        phi_deg: float,
        n: int,
        seed: int,
        point_index: int = 0,
        workers: Optional[int] = None
    ) -> InequalityReport:
        """
        Report built from sampled frequencies; the inequality is judged within 4 combined standard errors.
        """
        theta, phi = Angle.from_degrees(theta_deg), Angle.from_degrees(phi_deg)
        reports = []
        variance = 0.0
        for stage in StageServices.canonical_stages(theta, phi):
            stage_seed = MonteCarloServices.derive_seed(seed, point_index, STAGE_INDEX[str(stage.label)])
            result = MonteCarloServices.pw_monte_carlo(stage, n, stage_seed, workers=workers)
            reports.append(result.fraction_report())
            variance += result.detection_stderr ** 2
        f1, f2, f3 = reports
        return cls.build_report(theta_deg, phi_deg, f1, f2, f3, tolerance=max(TOLERANCE, 4.0 * math.sqrt(variance)))

    @classmethod
    def grid_degrees(cls, step_deg: float) -> list[float]:
        """
        Axis values [0, 180) in steps of `step_deg`.
        """
        count = math.ceil(180.0 / step_deg - 1e-9)
        return [i * step_deg for i in range(count)]

    @classmethod
    def validate_step_degrees(cls, step_deg: float) -> None:
        if not math.isfinite(step_deg) or step_deg <= 0.0:
            raise ValidationError(f'Grid step must be positive, got {step_deg} degrees')
        if step_deg > 90.0 + 1e-9:
            raise ValidationError(f'Grid step must not exceed 90 degrees, got {step_deg}')

    @classmethod
    def scan_grid_degrees(
        cls,
        step_deg: float,
        model: str = ScanModel.CLOSED_FORM,
        n: Optional[int] = None,
        seed: Optional[int] = None,
        workers: Optional[int] = None
    ) -> list[InequalityReport]:
        """
        Reports over the half-open grid [0, 180)^2, theta outer, phi inner.

        :param step_deg: Grid step in degrees, in (0, 90].
        :type step_deg: float
        :param model: ScanModel value.
        :type model: str
        :param n: Trials per stage and point in Monte Carlo mode.
        :type n: int | None
        :param seed: Run seed in Monte Carlo mode; each point and stage derives its own.
        :type seed: int | None
        :param workers: Monte Carlo chunk fan-out.
        :type workers: int | None
        :raises ValidationError: On an invalid step or missing Monte Carlo parameters.
        :return: One report per grid point.
        :rtype: list[InequalityReport]
        """
        cls.validate_step_degrees(step_deg)
        model = ScanModel(model)
        if model == ScanModel.MONTE_CARLO and (n is None or seed is None):
            raise ValidationError('Monte Carlo scans need a trial count and a seed')

        axis = cls.grid_degrees(step_deg)
        logger.info('InequalityServices - scan: %s points, model=%s', len(axis) ** 2, model)

        reports = []
        for i, theta_deg in enumerate(axis):
            for j, phi_deg in enumerate(axis):
                if model == ScanModel.CLOSED_FORM:
                    reports.append(cls.eval_point_degrees(theta_deg, phi_deg))
                else:
                    reports.append(cls.eval_point_mc(
                        theta_deg, phi_deg, n, seed, point_index=i * len(axis) + j, workers=workers
                    ))
        return reports

    @classmethod
    def scan_grid(
        cls,
        step: float,
        model: str = ScanModel.CLOSED_FORM,
        n: Optional[int] = None,
        seed: Optional[int] = None
    ) -> list[InequalityReport]:
        """
        Same as `scan_grid_degrees` with the step given in radians.
        """
        if not math.isfinite(step) or step <= 0.0:
            raise ValidationError(f'Grid step must be positive, got {step} radians')
        return cls.scan_grid_degrees(math.degrees(step), model=model, n=n, seed=seed)

    @classmethod
    def violation_family(cls, theta: Angle) -> InequalityReport:
        """
        Report at (theta, 2 theta), where the inequality fails for every 0 < theta < 45 degrees.

        The violation cos(2 theta) - cos^2(2 theta) vanishes like 2 theta^2 as
        theta goes to 0. Below about 7e-7 radians it is smaller than the 1e-12
        comparison tolerance, and the tolerance rule wins: such reports come
        back with `eq6_satisfied` true even though the exact inequality fails.

        :param theta: Middle-loop axis, strictly between 0 and 45 degrees.
        :type theta: Angle
        :raises ValidationError: If theta is outside (0, 45) degrees.
        :return: The report.
        :rtype: InequalityReport
        """
        if not 0.0 < theta.value < math.pi / 4:
            raise ValidationError(f'Violation family needs 0 < theta < 45 degrees, got {theta.degrees}')
        return cls.eval_point_degrees(theta.degrees, 2.0 * theta.degrees)

    @classmethod
    def single_particle_point(cls, theta_deg: float, phi_deg: float) -> InequalityReport:
        """
        The same report with lone photons: x-polarized for stage 1, y for stage 2, theta for stage 3.

        No partner photon and no post-selection are involved, yet the
        inequality fails exactly where it fails for the entangled source.
        """
        theta, phi = Angle.from_degrees(theta_deg), Angle.from_degrees(phi_deg)
        inputs = (X, Y, theta)
        reports = []
        for axis, stage in zip(inputs, StageServices.canonical_stages(theta, phi)):
            reports.append(FractionReport(
                coarse=QuantumServices.single_particle_fraction(axis, stage.right_chain),
                components=PilotWaveServices.branch_probabilities(axis, stage.right_chain),
            ))
        f1, f2, f3 = reports
        return cls.build_report(theta_deg, phi_deg, f1, f2, f3)
