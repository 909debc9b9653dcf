import json
import math
import os
import tempfile
from io import StringIO
from pathlib import Path

from django.core.exceptions import ValidationError
from django.core.management import CommandError, call_command
from django.test import SimpleTestCase, override_settings

from bell.management.commands.analyzer import Command as AnalyzerCommand
from bell.models import ScanModel
from bell.services.audit_services import AuditServices
from bell.services.inequality_services import InequalityServices
from bell.services.report_services import SCAN_COLUMNS, format_value
from bell.services.run_services import RunServices
from bell.values import RunConfig
from optics.services.stage_services import StageServices
from optics.values import Angle


def run_analyzer(*args) -> str:
    out = StringIO()
    call_command('analyzer', *args, stdout=out, stderr=StringIO())
    return out.getvalue()


class EvalPointTests(SimpleTestCase):
    def test_violation_at_30_60(self):
        report = InequalityServices.eval_point(Angle.from_degrees(30), Angle.from_degrees(60))
        self.assertAlmostEqual(report.eq6_lhs, 0.5, delta=1e-12)
        self.assertAlmostEqual(report.eq6_rhs, 0.75, delta=1e-12)
        self.assertFalse(report.eq6_satisfied)
        self.assertAlmostEqual(report.identification_gap, -0.375, delta=1e-12)
        self.assertAlmostEqual(report.eq5_residual, -0.375, delta=1e-12)
        self.assertAlmostEqual(report.eq4_lhs, report.eq4_rhs, delta=1e-12)

    def test_aligned_degenerate_point(self):
        report = InequalityServices.eval_point(Angle(0.0), Angle(0.0))
        self.assertAlmostEqual(report.eq4_lhs, 1.0, delta=1e-12)
        self.assertTrue(report.eq6_satisfied)
        self.assertAlmostEqual(report.identification_gap, 0.0, delta=1e-12)

    def test_components_match_the_stage_tables(self):
        report = InequalityServices.eval_point_degrees(30.0, 60.0)
        self.assertAlmostEqual(report.f1_xtheta_phi, 0.1875, delta=1e-12)
        self.assertAlmostEqual(report.f1_xthetabar_phi, 0.0625, delta=1e-12)
        self.assertAlmostEqual(report.f2_ytheta_phi, 0.1875, delta=1e-12)
        self.assertAlmostEqual(report.f2_ytheta_phibar, 0.0625, delta=1e-12)
        self.assertAlmostEqual(report.f3_xtheta_phi, 0.5625, delta=1e-12)
        self.assertAlmostEqual(report.f3_ytheta_phi, 0.1875, delta=1e-12)


class ScanGridTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.reports = InequalityServices.scan_grid_degrees(1.0)

    def test_grid_size_and_order(self):
        self.assertEqual(len(self.reports), 180 * 180)
        self.assertEqual((self.reports[1].theta_deg, self.reports[1].phi_deg), (0.0, 1.0))
        self.assertEqual((self.reports[180].theta_deg, self.reports[180].phi_deg), (1.0, 0.0))

    def test_violation_at_grid_point(self):
        report = self.reports[30 * 180 + 60]
        self.assertEqual((report.theta_deg, report.phi_deg), (30.0, 60.0))
        self.assertFalse(report.eq6_satisfied)

    def test_equation_identities_everywhere(self):
        for report in self.reports:
            self.assertLess(abs(report.eq4_lhs - report.eq4_rhs), 1e-12)
            self.assertLess(abs(report.eq5_residual - report.identification_gap), 1e-12)
            self.assertEqual(report.eq6_satisfied, report.eq6_lhs >= report.eq6_rhs - 1e-12)

    def test_gap_is_generically_nonzero(self):
        nonzero = sum(1 for r in self.reports if abs(r.identification_gap) > 1e-9)
        self.assertGreater(nonzero / len(self.reports), 0.5)

    def test_gap_vanishes_on_degenerate_lines(self):
        lines = [r for r in self.reports if r.theta_deg in (0.0, 90.0)]
        self.assertEqual(len(lines), 360)
        for report in lines:
            self.assertLess(abs(report.identification_gap), 1e-12)

    def test_radian_step_matches_degree_step(self):
        coarse = InequalityServices.scan_grid(math.pi / 2)
        self.assertEqual(len(coarse), 4)
        for report in coarse:
            self.assertLess(abs(report.identification_gap), 1e-12)

    def test_invalid_steps(self):
        with self.assertRaises(ValidationError):
            InequalityServices.scan_grid(0.0)
        with self.assertRaises(ValidationError):
            InequalityServices.scan_grid(-0.1)
        with self.assertRaises(ValidationError):
            InequalityServices.scan_grid_degrees(91.0)

    def test_monte_carlo_scan(self):
        reports = InequalityServices.scan_grid_degrees(90.0, model=ScanModel.MONTE_CARLO, n=2000, seed=5)
        self.assertEqual(len(reports), 4)
        self.assertEqual(reports, InequalityServices.scan_grid_degrees(90.0, model=ScanModel.MONTE_CARLO, n=2000, seed=5))
        closed = InequalityServices.scan_grid_degrees(90.0)
        for sampled, exact in zip(reports, closed):
            self.assertLess(abs(sampled.eq4_lhs - sampled.eq4_rhs), 1e-9)
            self.assertEqual(sampled.eq6_satisfied, exact.eq6_satisfied)
            self.assertAlmostEqual(sampled.identification_gap, exact.identification_gap, delta=1e-9)

    def test_monte_carlo_scan_needs_trials(self):
        with self.assertRaises(ValidationError):
            InequalityServices.scan_grid_degrees(90.0, model=ScanModel.MONTE_CARLO)


class ViolationFamilyTests(SimpleTestCase):
    def test_family_violates(self):
        for theta_deg in range(5, 45, 5):
            report = InequalityServices.violation_family(Angle.from_degrees(theta_deg))
            self.assertFalse(report.eq6_satisfied, msg=f'theta={theta_deg}')

    def test_examples(self):
        report = InequalityServices.violation_family(Angle.from_degrees(30))
        self.assertAlmostEqual(report.violation, 0.25, delta=1e-12)

        report = InequalityServices.violation_family(Angle.from_degrees(22.5))
        self.assertAlmostEqual(report.eq6_lhs, 0.5 + math.sin(math.radians(22.5)) ** 2, delta=1e-12)
        self.assertAlmostEqual(report.eq6_rhs, math.cos(math.radians(22.5)) ** 2, delta=1e-12)
        self.assertAlmostEqual(report.eq6_lhs, 0.6464466094067263, delta=1e-12)
        self.assertFalse(report.eq6_satisfied)

    def test_violation_vanishes_near_zero(self):
        small = InequalityServices.violation_family(Angle.from_degrees(0.01)).violation
        smaller = InequalityServices.violation_family(Angle.from_degrees(0.001)).violation
        self.assertGreater(small, smaller)
        self.assertLess(smaller, 1e-5)

    def test_tolerance_wins_for_tiny_angles(self):
        report = InequalityServices.violation_family(Angle(1e-7))
        self.assertGreater(report.violation, 0.0)
        self.assertLess(report.violation, 1e-12)
        self.assertTrue(report.eq6_satisfied)

    def test_out_of_range(self):
        for theta_deg in (0.0, 46.0, 60.0):
            with self.assertRaises(ValidationError):
                InequalityServices.violation_family(Angle.from_degrees(theta_deg))


class SingleParticleTests(SimpleTestCase):
    def test_audit_closed_form_on_5_degree_grid(self):
        for theta_deg in range(0, 180, 5):
            for phi_deg in range(0, 180, 5):
                for stage in StageServices.canonical_stages(Angle.from_degrees(theta_deg), Angle.from_degrees(phi_deg)):
                    self.assertTrue(AuditServices.single_particle_audit(stage, with_monte_carlo=False))

    def test_audit_with_monte_carlo(self):
        for stage in StageServices.canonical_stages(Angle.from_degrees(30), Angle.from_degrees(60)):
            self.assertTrue(AuditServices.single_particle_audit(stage, n=100000, seed=77))

    def test_lone_photons_violate_too(self):
        lone = InequalityServices.single_particle_point(30.0, 60.0)
        paired = InequalityServices.eval_point_degrees(30.0, 60.0)
        self.assertFalse(lone.eq6_satisfied)
        self.assertAlmostEqual(lone.eq6_lhs, paired.eq6_lhs, delta=1e-12)
        self.assertAlmostEqual(lone.identification_gap, paired.identification_gap, delta=1e-12)


class AuditSuiteTests(SimpleTestCase):
    def test_suites_pass_on_coarse_grid(self):
        results = AuditServices.run_suites(step_deg=15.0, mc_trials=20000, seeds=[1, 2], seed=3)
        failed = [r for r in results if not r.passed]
        self.assertEqual(failed, [])
        self.assertEqual(
            [r.name for r in results],
            [
                'singlet_invariance', 'quantum_closed_forms', 'open_loop_transparency',
                'rotation_invariance', 'pilot_wave_formulas', 'decomposition_identities',
                'model_equivalence', 'gap_equivalence', 'gap_generic', 'gap_degenerate_lines',
                'violation_family', 'single_particle_audit', 'mc_consistency', 'mc_conditioning_rate',
            ],
        )


class RunServicesTests(SimpleTestCase):
    def test_invalid_configs(self):
        for config in (
            RunConfig(command='scan', step_deg=0.0),
            RunConfig(command='scan', step_deg=-1.0),
            RunConfig(command='mc', n=0),
            RunConfig(command='stage', theta_deg=float('inf')),
            RunConfig(command='stage', seed=-1),
            RunConfig(command='bogus'),
        ):
            with self.assertRaises(ValidationError):
                RunServices.validate(config)

    def test_format_value(self):
        self.assertEqual(format_value(True), 'true')
        self.assertEqual(format_value(0.1), '0.10000000000000001')
        self.assertEqual(format_value(30.0), '30')


class AnalyzerCommandTests(SimpleTestCase):
    def test_stage_json(self):
        document = json.loads(run_analyzer('stage', '--theta-deg', '30', '--phi-deg', '60', '--format', 'json', '--seed', '9'))
        stages = {entry['label']: entry for entry in document['stages']}
        self.assertAlmostEqual(stages['STAGE1']['quantum']['coarse'], 0.25, delta=1e-12)
        self.assertAlmostEqual(stages['STAGE2']['quantum']['coarse'], 0.25, delta=1e-12)
        self.assertAlmostEqual(stages['STAGE3']['quantum']['coarse'], 0.75, delta=1e-12)
        self.assertIsNone(stages['STAGE1']['quantum']['components'])
        self.assertAlmostEqual(stages['STAGE1']['pilot_wave']['components']['PPP'], 0.1875, delta=1e-12)
        self.assertAlmostEqual(stages['STAGE3']['pilot_wave']['coarse'], 0.75, delta=1e-12)
        self.assertEqual(document['metadata']['seed'], 9)
        self.assertEqual(document['metadata']['seed_source'], 'cli')

    def test_stage_csv_header(self):
        output = run_analyzer('stage', '--stage', 'stage2')
        lines = output.splitlines()
        self.assertEqual(lines[0], 'stage,engine,component,probability')
        self.assertTrue(all(line.startswith('STAGE2,') for line in lines[1:]))

    def test_scan_csv_is_deterministic(self):
        first = run_analyzer('scan', '--step-deg', '5', '--format', 'csv')
        second = run_analyzer('scan', '--step-deg', '5', '--format', 'csv')
        self.assertEqual(first, second)
        lines = first.splitlines()
        self.assertEqual(lines[0], ','.join(SCAN_COLUMNS))
        self.assertEqual(len(lines), 1 + 36 * 36)
        row = dict(zip(SCAN_COLUMNS, lines[1 + 6 * 36 + 12].split(',')))
        self.assertEqual((row['theta_deg'], row['phi_deg']), ('30', '60'))
        self.assertEqual(row['eq6_satisfied'], 'false')
        self.assertAlmostEqual(float(row['identification_gap']), -0.375, delta=1e-12)

    def test_scan_writes_output_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            target = os.path.join(tmp, 'scan.csv')
            run_analyzer('scan', '--step-deg', '45', '--output', target)
            self.assertEqual(Path(target).read_text().splitlines()[0], ','.join(SCAN_COLUMNS))
            self.assertEqual(os.listdir(tmp), ['scan.csv'])

    def test_invalid_config_leaves_no_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            target = os.path.join(tmp, 'scan.csv')
            with self.assertRaises(CommandError) as ctx:
                run_analyzer('scan', '--step-deg', '0', '--output', target)
            self.assertEqual(ctx.exception.returncode, 2)
            self.assertEqual(os.listdir(tmp), [])

    def test_mc_aligned_stage3(self):
        document = json.loads(run_analyzer(
            'mc', '--theta-deg', '0', '--phi-deg', '0', '--n', '1000', '--seed', '7', '--format', 'json'
        ))
        runs = {run['label']: run for run in document['runs']}
        self.assertEqual(runs['STAGE3']['frequencies']['PPP']['frequency'], 1.0)
        self.assertEqual(runs['STAGE3']['seed'], 7)

    def test_mc_independent_of_workers(self):
        serial = run_analyzer('mc', '--n', '20000', '--seed', '7', '--workers', '1')
        parallel = run_analyzer('mc', '--n', '20000', '--seed', '7', '--workers', '6')
        self.assertEqual(serial, parallel)
        self.assertTrue(serial.startswith('stage,seed,seed_source,n,n_conditioned,channels,count,frequency,stderr\n'))

    @override_settings(DEFAULT_SEED=31337, DEFAULT_SEED_FROM_ENV=True)
    def test_environment_seed_is_echoed(self):
        document = json.loads(run_analyzer('mc', '--n', '100', '--format', 'json'))
        self.assertEqual(document['metadata']['seed'], 31337)
        self.assertEqual(document['metadata']['seed_source'], 'env')

    def test_empty_mc_run_is_a_usage_error(self):
        with self.assertRaises(CommandError) as ctx:
            run_analyzer('mc', '--n', '0')
        self.assertEqual(ctx.exception.returncode, 2)

    def test_missing_output_directory_is_a_usage_error(self):
        with tempfile.TemporaryDirectory() as tmp:
            target = os.path.join(tmp, 'missing', 'scan.csv')
            with self.assertRaises(CommandError) as ctx:
                run_analyzer('scan', '--step-deg', '45', '--output', target)
            self.assertEqual(ctx.exception.returncode, 2)
            self.assertEqual(os.listdir(tmp), [])

    def test_check_defaults_to_a_million_trials(self):
        options = {
            'run_command': 'check', 'theta_deg': 30.0, 'phi_deg': 60.0, 'step_deg': 1.0,
            'model': ScanModel.CLOSED_FORM, 'n': None, 'seed': None, 'workers': 1,
            'stage': None, 'format': 'csv', 'output': None,
        }
        self.assertEqual(AnalyzerCommand()._config(options).n, 10 ** 6)
        self.assertEqual(AnalyzerCommand()._config({**options, 'run_command': 'mc'}).n, 100000)

    @override_settings(REFERENCE_SEEDS=[1, 2])
    def test_check_passes(self):
        output = run_analyzer('check', '--step-deg', '1', '--n', '20000', '--seed', '3')
        self.assertIn('All 14 suites passed', output)
        self.assertNotIn('FAIL', output)
