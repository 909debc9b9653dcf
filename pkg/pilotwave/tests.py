import math
import time

from django.core.exceptions import ValidationError
from django.test import SimpleTestCase, override_settings
from hypothesis import given, settings, strategies as st

from optics.models import Blocker
from optics.services.stage_services import StageServices
from optics.values import Angle, LoopSpec, StageSpec, X, Y
from pilotwave.services.monte_carlo_services import MAX_CHAIN_LENGTH, MonteCarloServices
from pilotwave.services.pilot_wave_services import PilotWaveServices
from pilotwave.tasks import run_trajectory_chunk_task
from quantum.services.quantum_services import QuantumServices

REFERENCE_SEEDS = [11, 2718281828, 3141592653, 8675309, 1234567890123]
MC_ANGLE_PAIRS = [(30.0, 60.0), (22.5, 45.0), (10.0, 80.0)]

degrees = st.floats(min_value=0.0, max_value=180.0, allow_nan=False, allow_infinity=False)


def c2(a):
    return math.cos(a) ** 2


def s2(a):
    return math.sin(a) ** 2


def stages_at(theta_deg, phi_deg):
    return StageServices.canonical_stages(Angle.from_degrees(theta_deg), Angle.from_degrees(phi_deg))


class PilotWaveComponentTests(SimpleTestCase):
    def test_stage1_example(self):
        stage1, _, _ = stages_at(30, 60)
        report = PilotWaveServices.pw_components(stage1)
        self.assertAlmostEqual(report.component_sum({1: 'P'}), 0.1875, delta=1e-12)
        self.assertAlmostEqual(report.component_sum({1: 'M'}), 0.0625, delta=1e-12)
        self.assertAlmostEqual(report.coarse, 0.25, delta=1e-12)

    def test_stage2_example(self):
        _, stage2, _ = stages_at(30, 60)
        report = PilotWaveServices.pw_components(stage2)
        self.assertAlmostEqual(report.component_sum({2: 'P'}), 0.1875, delta=1e-12)
        self.assertAlmostEqual(report.component_sum({2: 'M'}), 0.0625, delta=1e-12)
        self.assertAlmostEqual(report.coarse, 0.25, delta=1e-12)

    def test_stage3_aligned_example(self):
        _, _, stage3 = stages_at(0, 0)
        report = PilotWaveServices.pw_components(stage3)
        self.assertAlmostEqual(report.component_sum({0: 'P'}), 1.0, delta=1e-12)
        self.assertAlmostEqual(report.component_sum({0: 'M'}), 0.0, delta=1e-12)
        self.assertAlmostEqual(report.coarse, 1.0, delta=1e-12)

    def test_coarse_examples(self):
        stage1, stage2, stage3 = stages_at(30, 60)
        self.assertAlmostEqual(PilotWaveServices.pw_coarse(stage1), 0.25, delta=1e-12)
        self.assertAlmostEqual(PilotWaveServices.pw_coarse(stage2), 0.25, delta=1e-12)
        self.assertAlmostEqual(PilotWaveServices.pw_coarse(stage3), 0.75, delta=1e-12)

    def test_empty_chain_is_a_single_certain_component(self):
        report = PilotWaveServices.pw_components(StageSpec(left_outcome=X))
        self.assertEqual(report.components, {'': 1.0})
        self.assertEqual(report.coarse, 1.0)

    def test_blocked_channels_never_appear(self):
        stage1, stage2, _ = stages_at(30, 60)
        self.assertTrue(all(seq[2] == 'P' for seq in PilotWaveServices.pw_components(stage1).components))
        self.assertTrue(all(seq[1] == 'P' for seq in PilotWaveServices.pw_components(stage2).components))

    def test_six_formulas_on_full_grid(self):
        for i in range(180):
            for j in range(180):
                theta, phi = math.radians(i), math.radians(j)
                stage1, stage2, stage3 = stages_at(i, j)
                r1 = PilotWaveServices.pw_components(stage1)
                r2 = PilotWaveServices.pw_components(stage2)
                r3 = PilotWaveServices.pw_components(stage3)

                self.assertAlmostEqual(r1.component_sum({1: 'P'}), c2(theta) * c2(phi), delta=1e-12)
                self.assertAlmostEqual(r1.component_sum({1: 'M'}), s2(theta) * c2(phi), delta=1e-12)
                self.assertAlmostEqual(r2.component_sum({2: 'P'}), s2(theta) * c2(phi - theta), delta=1e-12)
                self.assertAlmostEqual(r2.component_sum({2: 'M'}), s2(theta) * s2(phi - theta), delta=1e-12)
                self.assertAlmostEqual(r3.component_sum({0: 'P'}), c2(theta) * c2(phi - theta), delta=1e-12)
                self.assertAlmostEqual(r3.component_sum({0: 'M'}), s2(theta) * c2(phi - theta), delta=1e-12)

                # Decompositions within each stage.
                self.assertAlmostEqual(r1.coarse, c2(phi), delta=1e-12)
                self.assertAlmostEqual(r2.coarse, s2(theta), delta=1e-12)
                self.assertAlmostEqual(r3.coarse, c2(phi - theta), delta=1e-12)

    def test_full_grid_is_fast(self):
        stages = [stage for i in range(180) for j in range(180) for stage in stages_at(i, j)]
        started = time.perf_counter()
        for stage in stages:
            PilotWaveServices.pw_components(stage)
        self.assertLess(time.perf_counter() - started, 5.0)

    @given(degrees, degrees)
    def test_model_equivalence_on_observables(self, theta_deg, phi_deg):
        for stage in stages_at(theta_deg, phi_deg):
            report = PilotWaveServices.pw_components(stage)
            self.assertTrue(all(0.0 <= p <= 1.0 for p in report.components.values()))
            self.assertAlmostEqual(
                report.coarse, QuantumServices.stage_fraction_qm(stage).coarse, delta=1e-12
            )

    @settings(max_examples=100)
    @given(
        degrees,
        st.lists(
            st.tuples(degrees, st.sampled_from([Blocker.OPEN, Blocker.BLOCK_PLUS, Blocker.BLOCK_MINUS])),
            max_size=5,
        ),
    )
    def test_custom_chains_match_quantum_coarse(self, left_deg, chain):
        stage = StageSpec(
            left_outcome=Angle.from_degrees(left_deg),
            right_chain=tuple(LoopSpec(Angle.from_degrees(d), b) for d, b in chain),
        )
        self.assertAlmostEqual(
            PilotWaveServices.pw_coarse(stage), QuantumServices.stage_fraction_qm(stage).coarse, delta=1e-12
        )


class MonteCarloTests(SimpleTestCase):
    def test_empty_run_is_rejected(self):
        stage1, _, _ = stages_at(30, 60)
        with self.assertRaisesMessage(ValidationError, 'Empty run'):
            MonteCarloServices.pw_monte_carlo(stage1, 0, 7)

    def test_seed_out_of_range_is_rejected(self):
        stage1, _, _ = stages_at(30, 60)
        with self.assertRaises(ValidationError):
            MonteCarloServices.pw_monte_carlo(stage1, 10, 2 ** 64)

    def test_aligned_stage3_is_deterministic(self):
        _, _, stage3 = stages_at(0, 0)
        result = MonteCarloServices.pw_monte_carlo(stage3, 100, 7)
        self.assertGreater(result.n_conditioned, 0)
        self.assertEqual(result.counts, {'PPP': result.n_conditioned})
        self.assertEqual(result.frequency('PPP'), 1.0)
        self.assertEqual(result.stderr('PPP'), 0.0)

    def test_repeat_runs_are_identical(self):
        stage1, _, _ = stages_at(30, 60)
        first = MonteCarloServices.pw_monte_carlo(stage1, 20000, 42)
        second = MonteCarloServices.pw_monte_carlo(stage1, 20000, 42)
        self.assertEqual(first, second)
        self.assertEqual(first.to_dict(), second.to_dict())

    def test_chunking_does_not_change_results(self):
        _, stage2, _ = stages_at(22.5, 45)
        serial = MonteCarloServices.pw_monte_carlo(stage2, 30001, 99, workers=1)
        for workers in (2, 3, 7, 16):
            self.assertEqual(MonteCarloServices.pw_monte_carlo(stage2, 30001, 99, workers=workers), serial)

    @override_settings(MC_WORKERS=5)
    def test_default_workers_come_from_settings(self):
        _, stage2, _ = stages_at(22.5, 45)
        self.assertEqual(
            MonteCarloServices.pw_monte_carlo(stage2, 5000, 3),
            MonteCarloServices.pw_monte_carlo(stage2, 5000, 3, workers=1),
        )

    def test_different_seeds_differ(self):
        stage1, _, _ = stages_at(30, 60)
        self.assertNotEqual(
            MonteCarloServices.pw_monte_carlo(stage1, 5000, 1).counts,
            MonteCarloServices.pw_monte_carlo(stage1, 5000, 2).counts,
        )

    def test_undetected_trials_carry_their_prefix(self):
        stage1, _, _ = stages_at(30, 60)
        result = MonteCarloServices.pw_monte_carlo(stage1, 20000, 5)
        self.assertLessEqual(result.n_detected, result.n_conditioned)
        self.assertEqual(result.n_detected + sum(result.undetected.values()), result.n_conditioned)
        self.assertTrue(all(len(seq) == 3 and seq.endswith('M') for seq in result.undetected))

    def test_undetected_prefixes_on_longest_chain(self):
        chain = tuple(
            LoopSpec(Angle.from_degrees(3.0 * (j + 1)), Blocker.BLOCK_MINUS) for j in range(MAX_CHAIN_LENGTH)
        )
        stage = StageSpec(left_outcome=Y, right_chain=chain)
        result = MonteCarloServices.pw_monte_carlo(stage, 2000, 7)

        self.assertTrue(result.undetected)
        for seq in result.undetected:
            self.assertEqual(seq, 'P' * (len(seq) - 1) + 'M', msg=seq)
        self.assertEqual(list(result.counts), ['P' * MAX_CHAIN_LENGTH])
        self.assertEqual(result.n_detected + sum(result.undetected.values()), result.n_conditioned)

        with self.assertRaises(ValidationError):
            MonteCarloServices.pw_monte_carlo(
                StageSpec(left_outcome=Y, right_chain=chain + (LoopSpec(X),)), 10, 7
            )

    def test_sampled_trajectories_replay_the_run(self):
        stage1, _, _ = stages_at(30, 60)
        result = MonteCarloServices.pw_monte_carlo(stage1, 300, 13)
        counts, undetected, conditioned = {}, {}, 0
        for index in range(300):
            trajectory = MonteCarloServices.sample_trajectory(stage1, 13, index)
            if trajectory is None:
                continue
            conditioned += 1
            target = counts if trajectory.detected else undetected
            target[trajectory.channel_record] = target.get(trajectory.channel_record, 0) + 1
            if trajectory.detected:
                self.assertEqual(len(trajectory.channel_record), len(stage1.right_chain))
            else:
                self.assertTrue(trajectory.channel_record.endswith('M'))
        self.assertEqual(conditioned, result.n_conditioned)
        self.assertEqual(counts, result.counts)
        self.assertEqual(undetected, result.undetected)

    def test_single_particle_runs_need_no_post_selection(self):
        stage1, _, _ = stages_at(30, 60)
        result = MonteCarloServices.run_single_particle(X, stage1.right_chain, 1000, 3)
        self.assertEqual(result.n_conditioned, 1000)

    def test_chunk_task_returns_partial_counts(self):
        _, _, stage3 = stages_at(0, 0)
        partial = run_trajectory_chunk_task.apply(args=(stage3.to_payload(), False, 7, 10, 20)).get()
        self.assertEqual(partial['n_trials'], 10)
        self.assertEqual(partial['counts'], {'PPP': 10})

    def test_convergence_to_closed_forms(self):
        for theta_deg, phi_deg in MC_ANGLE_PAIRS:
            for stage in stages_at(theta_deg, phi_deg):
                expected = PilotWaveServices.pw_components(stage).components
                for seed in REFERENCE_SEEDS:
                    result = MonteCarloServices.pw_monte_carlo(stage, 10 ** 6, seed)
                    n = result.n
                    self.assertLessEqual(abs(result.n_conditioned / n - 0.5), 4 * math.sqrt(0.25 / n))
                    for channels, p in expected.items():
                        self.assertTrue(
                            MonteCarloServices.within_band(
                                result.frequency(channels), p, result.stderr(channels), result.n_conditioned
                            ),
                            msg=f'{stage.label} {channels} seed={seed}: {result.frequency(channels)} vs {p}',
                        )

    def test_stage1_theta_channel_example(self):
        stage1, _, _ = stages_at(30, 60)
        result = MonteCarloServices.pw_monte_carlo(stage1, 10 ** 6, 2024)
        self.assertLessEqual(abs(result.frequency('PPP') - 0.1875), 4 * result.stderr('PPP'))
