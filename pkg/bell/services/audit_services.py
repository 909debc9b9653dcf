import logging
import math
from typing import Callable, Optional

import numpy as np
from django.conf import settings

from bell.services.inequality_services import InequalityServices
from bell.values import InequalityReport, SuiteResult
from optics.models import Blocker
from optics.services.optics_services import OpticsServices
from optics.services.stage_services import StageServices
from optics.values import Angle, LoopSpec, StageSpec, TOLERANCE, X
from pilotwave.services.monte_carlo_services import MonteCarloServices
from pilotwave.services.pilot_wave_services import PilotWaveServices
from quantum.services.quantum_services import QuantumServices

logger = logging.getLogger(__name__)

MC_ANGLE_PAIRS = [(30.0, 60.0), (22.5, 45.0), (10.0, 80.0)]
ROTATIONS_DEG = [0.0, 7.0, 33.3, 45.0, 90.0, 123.4, 179.0]
VIOLATION_THETAS_DEG = [5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0]


def _closed_forms(theta: float, phi: float) -> dict[str, float]:
    """
    Textbook expressions of every stage fraction and component, radians in.
    """
    c2 = lambda a: math.cos(a) ** 2
    s2 = lambda a: math.sin(a) ** 2
    return {
        'f1_coarse': c2(phi),
        'f2_coarse': s2(theta),
        'f3_coarse': c2(phi - theta),
        'f1_xtheta_phi': c2(theta) * c2(phi),
        'f1_xthetabar_phi': s2(theta) * c2(phi),
        'f2_ytheta_phi': s2(theta) * c2(phi - theta),
        'f2_ytheta_phibar': s2(theta) * s2(phi - theta),
        'f3_xtheta_phi': c2(theta) * c2(phi - theta),
        'f3_ytheta_phi': s2(theta) * c2(phi - theta),
    }


class AuditServices:
    """
    Numerical audit of the derivation: closed forms, decompositions, the
    cross-stage identification and the single-particle equivalence.
    """

    @classmethod
    def _grid_suite(
        cls,
        name: str,
        reports: list[InequalityReport],
        residual: Callable[[InequalityReport], float],
        tolerance: float = TOLERANCE
    ) -> SuiteResult:
        worst = max((abs(residual(r)) for r in reports), default=0.0)
        return SuiteResult(
            name=name,
            passed=worst <= tolerance,
            detail=f'{len(reports)} points, worst residual {worst:.3e}',
        )

    @classmethod
    def single_particle_audit(
        cls,
        stage: StageSpec,
        with_monte_carlo: bool = True,
        n: Optional[int] = None,
        seed: Optional[int] = None
    ) -> bool:
        """
        Check that post-selecting the entangled pair is the same as sending a lone photon.

        The lone photon is polarized along the complement of the stage's left
        outcome. The closed forms must agree within 1e-12; with Monte Carlo,
        both the post-selected run and a lone-photon run must land within four
        standard errors of the closed form.

        :param stage: Canonical stage to audit.
        :type stage: StageSpec
        :param with_monte_carlo: Whether to run the sampled legs too.
        :type with_monte_carlo: bool
        :param n: Trials per sampled leg, defaults to settings.AUDIT_MC_TRIALS.
        :type n: int | None
        :param seed: Seed of the sampled legs, defaults to settings.DEFAULT_SEED.
        :type seed: int | None
        :return: True if every comparison agrees.
        :rtype: bool
        """
        axis = OpticsServices.complement(stage.left_outcome)
        entangled = QuantumServices.stage_fraction_qm(stage).coarse
        lone = QuantumServices.single_particle_fraction(axis, stage.right_chain)
        if abs(entangled - lone) > TOLERANCE:
            logger.warning('AuditServices - %s closed forms disagree: %s vs %s', stage.label, entangled, lone)
            return False
        if not with_monte_carlo:
            return True

        n = settings.AUDIT_MC_TRIALS if n is None else n
        seed = settings.DEFAULT_SEED if seed is None else seed
        paired = MonteCarloServices.pw_monte_carlo(stage, n, seed)
        single = MonteCarloServices.run_single_particle(
            axis, stage.right_chain, n, MonteCarloServices.derive_seed(seed, 1)
        )
        for result in (paired, single):
            if not MonteCarloServices.within_band(
                result.detection_frequency, lone, result.detection_stderr, result.n_conditioned
            ):
                logger.warning(
                    'AuditServices - %s sampled fraction %s outside band of %s',
                    stage.label, result.detection_frequency, lone
                )
                return False
        return True

    @classmethod
    def singlet_invariance(cls, step_deg: float) -> SuiteResult:
        reference = QuantumServices.singlet_state(X)
        worst = 0.0
        for deg in InequalityServices.grid_degrees(step_deg):
            state = QuantumServices.singlet_state(Angle.from_degrees(deg))
            # Axes are defined modulo pi, so the state is fixed only up to a global sign.
            deviation = min(np.max(np.abs(state - reference)), np.max(np.abs(state + reference)))
            worst = max(worst, float(deviation))
            _, probability = QuantumServices.condition_on_left(Angle.from_degrees(deg))
            worst = max(worst, abs(probability - 0.5))
        return SuiteResult('singlet_invariance', worst <= TOLERANCE, f'worst deviation {worst:.3e}')

    @classmethod
    def quantum_closed_forms(cls, reports: list[InequalityReport]) -> SuiteResult:
        def residual(r):
            expected = _closed_forms(r.theta.value, r.phi.value)
            return max(abs(getattr(r, key) - expected[key]) for key in ('f1_coarse', 'f2_coarse', 'f3_coarse'))
        return cls._grid_suite('quantum_closed_forms', reports, residual)

    @classmethod
    def pilot_wave_formulas(cls, reports: list[InequalityReport]) -> SuiteResult:
        keys = (
            'f1_xtheta_phi', 'f1_xthetabar_phi', 'f2_ytheta_phi',
            'f2_ytheta_phibar', 'f3_xtheta_phi', 'f3_ytheta_phi',
        )

        def residual(r):
            expected = _closed_forms(r.theta.value, r.phi.value)
            return max(abs(getattr(r, key) - expected[key]) for key in keys)
        return cls._grid_suite('pilot_wave_formulas', reports, residual)

    @classmethod
    def decomposition_identities(cls, reports: list[InequalityReport]) -> SuiteResult:
        def residual(r):
            expected = _closed_forms(r.theta.value, r.phi.value)
            return max(
                abs(r.f1_xtheta_phi + r.f1_xthetabar_phi - expected['f1_coarse']),
                abs(r.f2_ytheta_phi + r.f2_ytheta_phibar - expected['f2_coarse']),
                abs(r.f3_xtheta_phi + r.f3_ytheta_phi - expected['f3_coarse']),
                abs(r.eq4_lhs - r.eq4_rhs),
            )
        return cls._grid_suite('decomposition_identities', reports, residual)

    @classmethod
    def model_equivalence(cls, step_deg: float) -> SuiteResult:
        worst = 0.0
        count = 0
        for theta_deg in InequalityServices.grid_degrees(step_deg):
            for phi_deg in InequalityServices.grid_degrees(step_deg):
                theta, phi = Angle.from_degrees(theta_deg), Angle.from_degrees(phi_deg)
                for stage in StageServices.canonical_stages(theta, phi):
                    worst = max(worst, abs(
                        PilotWaveServices.pw_coarse(stage) - QuantumServices.stage_fraction_qm(stage).coarse
                    ))
                    count += 1
        return SuiteResult('model_equivalence', worst <= TOLERANCE, f'{count} stages, worst residual {worst:.3e}')

    @classmethod
    def open_loop_transparency(cls, step_deg: float) -> SuiteResult:
        worst = 0.0
        coarse_step = max(step_deg, 15.0)
        for theta_deg in InequalityServices.grid_degrees(coarse_step):
            for phi_deg in InequalityServices.grid_degrees(coarse_step):
                theta, phi = Angle.from_degrees(theta_deg), Angle.from_degrees(phi_deg)
                for stage in StageServices.canonical_stages(theta, phi):
                    base = QuantumServices.stage_fraction_qm(stage).coarse
                    for index in range(len(stage.right_chain) + 1):
                        extra = LoopSpec(Angle.from_degrees(theta_deg + phi_deg + 11.0), Blocker.OPEN)
                        padded = stage.with_loop_inserted(index, extra)
                        worst = max(worst, abs(QuantumServices.stage_fraction_qm(padded).coarse - base))
        return SuiteResult('open_loop_transparency', worst <= TOLERANCE, f'worst residual {worst:.3e}')

    @classmethod
    def rotation_invariance(cls, step_deg: float) -> SuiteResult:
        worst = 0.0
        coarse_step = max(step_deg, 15.0)
        for theta_deg in InequalityServices.grid_degrees(coarse_step):
            for phi_deg in InequalityServices.grid_degrees(coarse_step):
                theta, phi = Angle.from_degrees(theta_deg), Angle.from_degrees(phi_deg)
                for stage in StageServices.canonical_stages(theta, phi):
                    base = QuantumServices.stage_fraction_qm(stage).coarse
                    for delta in ROTATIONS_DEG:
                        rotated = stage.rotated(math.radians(delta))
                        worst = max(worst, abs(QuantumServices.stage_fraction_qm(rotated).coarse - base))
        return SuiteResult('rotation_invariance', worst <= TOLERANCE, f'worst residual {worst:.3e}')

    @classmethod
    def gap_equivalence(cls, reports: list[InequalityReport]) -> SuiteResult:
        return cls._grid_suite('gap_equivalence', reports, lambda r: r.eq5_residual - r.identification_gap)

    @classmethod
    def gap_generic(cls, reports: list[InequalityReport]) -> SuiteResult:
        nonzero = sum(1 for r in reports if abs(r.identification_gap) > 1e-9)
        share = nonzero / len(reports) if reports else 0.0
        return SuiteResult('gap_generic', share > 0.5, f'{share:.1%} of points carry a nonzero gap')

    @classmethod
    def gap_degenerate_lines(cls, reports: list[InequalityReport]) -> SuiteResult:
        on_lines = [r for r in reports if r.theta_deg in (0.0, 90.0)]
        result = cls._grid_suite('gap_degenerate_lines', on_lines, lambda r: r.identification_gap)
        return SuiteResult(result.name, result.passed and bool(on_lines), result.detail)

    @classmethod
    def violation_family(cls) -> SuiteResult:
        failures = []
        for theta_deg in VIOLATION_THETAS_DEG:
            report = InequalityServices.violation_family(Angle.from_degrees(theta_deg))
            expected = math.cos(2 * report.theta.value) - math.cos(2 * report.theta.value) ** 2
            if report.eq6_satisfied or abs(report.violation - expected) > TOLERANCE:
                failures.append(theta_deg)
        anchor = InequalityServices.eval_point_degrees(30.0, 60.0)
        anchor_ok = (
            abs(anchor.eq6_lhs - 0.5) <= TOLERANCE
            and abs(anchor.eq6_rhs - 0.75) <= TOLERANCE
            and abs(anchor.identification_gap + 0.375) <= TOLERANCE
            and not anchor.eq6_satisfied
        )
        detail = f'{len(VIOLATION_THETAS_DEG) - len(failures)}/{len(VIOLATION_THETAS_DEG)} family members violate'
        if failures:
            detail += f'; not violated at {failures}'
        return SuiteResult('violation_family', not failures and anchor_ok, detail)

    @classmethod
    def single_particle_suite(cls, mc_trials: int, seed: int) -> SuiteResult:
        failures = []
        for theta_deg in InequalityServices.grid_degrees(5.0):
            for phi_deg in InequalityServices.grid_degrees(5.0):
                theta, phi = Angle.from_degrees(theta_deg), Angle.from_degrees(phi_deg)
                for stage in StageServices.canonical_stages(theta, phi):
                    if not cls.single_particle_audit(stage, with_monte_carlo=False):
                        failures.append((theta_deg, phi_deg, str(stage.label)))
        theta, phi = Angle.from_degrees(30.0), Angle.from_degrees(60.0)
        for stage in StageServices.canonical_stages(theta, phi):
            if not cls.single_particle_audit(stage, n=mc_trials, seed=seed):
                failures.append((30.0, 60.0, f'{stage.label} (sampled)'))
        detail = 'all stages agree' if not failures else f'{len(failures)} disagreements, first {failures[0]}'
        return SuiteResult('single_particle_audit', not failures, detail)

    @classmethod
    def mc_consistency(cls, mc_trials: int, seeds: list[int]) -> list[SuiteResult]:
        """
        Sampled component frequencies and conditioning rates against the closed forms.
        """
        misses = []
        rate_misses = []
        comparisons = 0
        for theta_deg, phi_deg in MC_ANGLE_PAIRS:
            theta, phi = Angle.from_degrees(theta_deg), Angle.from_degrees(phi_deg)
            for stage in StageServices.canonical_stages(theta, phi):
                expected = PilotWaveServices.pw_components(stage).components
                for seed in seeds:
                    result = MonteCarloServices.pw_monte_carlo(stage, mc_trials, seed)
                    rate = result.n_conditioned / result.n
                    if abs(rate - 0.5) > 4.0 * math.sqrt(0.25 / result.n):
                        rate_misses.append((theta_deg, phi_deg, str(stage.label), seed))
                    for channels, p in expected.items():
                        comparisons += 1
                        if not MonteCarloServices.within_band(
                            result.frequency(channels), p, result.stderr(channels), result.n_conditioned
                        ):
                            misses.append((theta_deg, phi_deg, str(stage.label), seed, channels))
        return [
            SuiteResult(
                'mc_consistency',
                not misses,
                f'{comparisons - len(misses)}/{comparisons} components within 4 stderr'
                + (f'; first miss {misses[0]}' if misses else ''),
            ),
            SuiteResult(
                'mc_conditioning_rate',
                not rate_misses,
                f'{len(rate_misses)} runs outside 4 sqrt(0.25/n) of one half',
            ),
        ]

    @classmethod
    def run_suites(
        cls,
        step_deg: float = 1.0,
        mc_trials: Optional[int] = None,
        seeds: Optional[list[int]] = None,
        seed: Optional[int] = None
    ) -> list[SuiteResult]:
        """
        Run every invariant suite.

        :param step_deg: Grid step of the closed-form suites.
        :type step_deg: float
        :param mc_trials: Trials per Monte Carlo run, defaults to settings.CHECK_MC_TRIALS.
        :type mc_trials: int | None
        :param seeds: Seeds of the consistency suite, defaults to settings.REFERENCE_SEEDS.
        :type seeds: list[int] | None
        :param seed: Seed of the sampled single-particle audit, defaults to settings.DEFAULT_SEED.
        :type seed: int | None
        :return: One result per suite, in a fixed order.
        :rtype: list[SuiteResult]
        """
        InequalityServices.validate_step_degrees(step_deg)
        mc_trials = settings.CHECK_MC_TRIALS if mc_trials is None else mc_trials
        seeds = settings.REFERENCE_SEEDS if seeds is None else seeds
        seed = settings.DEFAULT_SEED if seed is None else seed

        logger.info('AuditServices - running suites at %s degree step', step_deg)
        reports = InequalityServices.scan_grid_degrees(step_deg)

        results = [
            cls.singlet_invariance(step_deg),
            cls.quantum_closed_forms(reports),
            cls.open_loop_transparency(step_deg),
            cls.rotation_invariance(step_deg),
            cls.pilot_wave_formulas(reports),
            cls.decomposition_identities(reports),
            cls.model_equivalence(step_deg),
            cls.gap_equivalence(reports),
            cls.gap_generic(reports if step_deg == 1.0 else InequalityServices.scan_grid_degrees(1.0)),
            cls.gap_degenerate_lines(reports),
            cls.violation_family(),
            cls.single_particle_suite(mc_trials, seed),
            *cls.mc_consistency(mc_trials, seeds),
        ]
        for result in results:
            if not result.passed:
                logger.warning('AuditServices - suite %s failed: %s', result.name, result.detail)
        return results
