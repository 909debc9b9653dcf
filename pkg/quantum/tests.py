import math
import random

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings, strategies as st

from optics.models import Blocker
from optics.services.optics_services import OpticsServices
from optics.services.stage_services import StageServices
from optics.values import Angle, LoopSpec, StageSpec, X, Y
from quantum.services.quantum_services import QuantumServices
from quantum.values import PureState

degrees = st.floats(min_value=0.0, max_value=180.0, allow_nan=False, allow_infinity=False)
blockers = st.sampled_from([Blocker.OPEN, Blocker.BLOCK_PLUS, Blocker.BLOCK_MINUS])
loops = st.builds(lambda deg, blocker: LoopSpec(Angle.from_degrees(deg), blocker), degrees, blockers)
stages = st.builds(
    lambda left, chain: StageSpec(left_outcome=Angle.from_degrees(left), right_chain=tuple(chain)),
    degrees,
    st.lists(loops, max_size=5),
)


def stages_at(theta_deg, phi_deg):
    return StageServices.canonical_stages(Angle.from_degrees(theta_deg), Angle.from_degrees(phi_deg))


class SingletTests(SimpleTestCase):
    def test_same_state_in_every_basis(self):
        reference = QuantumServices.singlet_state(X)
        for deg in range(0, 180, 5):
            state = QuantumServices.singlet_state(Angle.from_degrees(deg))
            deviation = min(np.max(np.abs(state - reference)), np.max(np.abs(state + reference)))
            self.assertLess(deviation, 1e-12)

    def test_condition_on_left_examples(self):
        state, p = QuantumServices.condition_on_left(Y)
        self.assertTrue(state.axis.is_close(X))
        self.assertAlmostEqual(p, 0.5, delta=1e-12)

        state, p = QuantumServices.condition_on_left(X)
        self.assertTrue(state.axis.is_close(Y))
        self.assertAlmostEqual(p, 0.5, delta=1e-12)

        theta = Angle.from_degrees(30)
        state, p = QuantumServices.condition_on_left(OpticsServices.complement(theta))
        self.assertTrue(state.axis.is_close(theta))
        self.assertAlmostEqual(p, 0.5, delta=1e-12)

    @given(degrees)
    def test_left_outcome_probability_is_half(self, deg):
        _, p = QuantumServices.condition_on_left(Angle.from_degrees(deg))
        self.assertAlmostEqual(p, 0.5, delta=1e-12)


class PropagateTests(SimpleTestCase):
    def test_open_loop_is_transparent(self):
        state = PureState(axis=X)
        out, survival = QuantumServices.propagate(state, LoopSpec(Angle.from_degrees(30), Blocker.OPEN))
        self.assertEqual(out, state)
        self.assertEqual(survival, 1.0)

    def test_block_minus_projects_onto_axis(self):
        theta = Angle.from_degrees(30)
        out, survival = QuantumServices.propagate(PureState(axis=Y), LoopSpec(theta, Blocker.BLOCK_MINUS))
        self.assertEqual(out.axis, theta)
        self.assertAlmostEqual(survival, math.sin(theta.value) ** 2, delta=1e-12)

        out, survival = QuantumServices.propagate(PureState(axis=theta), LoopSpec(theta, Blocker.BLOCK_MINUS))
        self.assertAlmostEqual(survival, 1.0, delta=1e-12)

    def test_block_plus_projects_onto_complement(self):
        theta = Angle.from_degrees(30)
        out, survival = QuantumServices.propagate(PureState(axis=X), LoopSpec(theta, Blocker.BLOCK_PLUS))
        self.assertTrue(out.axis.is_close(Angle.from_degrees(120)))
        self.assertAlmostEqual(survival, 0.25, delta=1e-12)


class StageFractionTests(SimpleTestCase):
    def test_examples(self):
        stage1, _, _ = stages_at(30, 0)
        self.assertAlmostEqual(QuantumServices.stage_fraction_qm(stage1).coarse, 1.0, delta=1e-12)

        stage1, stage2, stage3 = stages_at(30, 60)
        self.assertAlmostEqual(QuantumServices.stage_fraction_qm(stage1).coarse, 0.25, delta=1e-12)
        self.assertAlmostEqual(QuantumServices.stage_fraction_qm(stage2).coarse, 0.25, delta=1e-12)
        self.assertAlmostEqual(QuantumServices.stage_fraction_qm(stage3).coarse, 0.75, delta=1e-12)

    def test_no_which_path_components(self):
        for stage in stages_at(30, 60):
            self.assertIsNone(QuantumServices.stage_fraction_qm(stage).components)

    def test_closed_forms_on_random_angles(self):
        rng = random.Random(1000)
        for _ in range(1000):
            theta = rng.uniform(0.0, math.pi)
            phi = rng.uniform(0.0, math.pi)
            stage1, stage2, stage3 = StageServices.canonical_stages(Angle(theta), Angle(phi))
            self.assertAlmostEqual(QuantumServices.stage_fraction_qm(stage1).coarse, math.cos(phi) ** 2, delta=1e-12)
            self.assertAlmostEqual(QuantumServices.stage_fraction_qm(stage2).coarse, math.sin(theta) ** 2, delta=1e-12)
            self.assertAlmostEqual(
                QuantumServices.stage_fraction_qm(stage3).coarse, math.cos(phi - theta) ** 2, delta=1e-12
            )

    @settings(max_examples=200)
    @given(stages, st.integers(min_value=0, max_value=5), degrees)
    def test_open_loop_insertion_changes_nothing(self, stage, index, deg):
        index = min(index, len(stage.right_chain))
        padded = stage.with_loop_inserted(index, LoopSpec(Angle.from_degrees(deg), Blocker.OPEN))
        self.assertAlmostEqual(
            QuantumServices.stage_fraction_qm(padded).coarse,
            QuantumServices.stage_fraction_qm(stage).coarse,
            delta=1e-12,
        )

    @settings(max_examples=200)
    @given(stages, st.floats(min_value=-math.pi, max_value=math.pi, allow_nan=False))
    def test_global_rotation_invariance(self, stage, delta):
        self.assertAlmostEqual(
            QuantumServices.stage_fraction_qm(stage.rotated(delta)).coarse,
            QuantumServices.stage_fraction_qm(stage).coarse,
            delta=1e-12,
        )

    @given(stages)
    def test_single_particle_equivalence(self, stage):
        lone = QuantumServices.single_particle_fraction(
            OpticsServices.complement(stage.left_outcome), stage.right_chain
        )
        self.assertAlmostEqual(QuantumServices.stage_fraction_qm(stage).coarse, lone, delta=1e-12)

    @given(stages, st.lists(loops, max_size=3))
    def test_survival_multiplies_over_concatenation(self, stage, tail):
        state, _ = QuantumServices.condition_on_left(stage.left_outcome)
        head_fraction = 1.0
        for loop in stage.right_chain:
            state, survival = QuantumServices.propagate(state, loop)
            head_fraction *= survival
        joined = StageSpec(left_outcome=stage.left_outcome, right_chain=stage.right_chain + tuple(tail))
        self.assertAlmostEqual(
            QuantumServices.stage_fraction_qm(joined).coarse,
            head_fraction * QuantumServices.chain_fraction(state, tail),
            delta=1e-12,
        )
