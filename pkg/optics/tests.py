import math

from django.core.exceptions import ValidationError
from django.test import SimpleTestCase
from hypothesis import given, settings, strategies as st

from optics.models import Blocker, StageLabel
from optics.services.optics_services import OpticsServices
from optics.services.stage_services import StageServices
from optics.values import Angle, FractionReport, LoopSpec, X, Y

angles = st.floats(min_value=-20.0, max_value=20.0, allow_nan=False, allow_infinity=False)


class AngleTests(SimpleTestCase):
    def test_canonical_range(self):
        self.assertEqual(Angle(math.pi).value, 0.0)
        self.assertAlmostEqual(Angle(-math.pi / 6).value, 5 * math.pi / 6, places=12)
        self.assertAlmostEqual(Angle.from_degrees(210).degrees, 30.0, places=10)

    def test_rejects_non_finite(self):
        with self.assertRaises(ValidationError):
            Angle(float('nan'))

    @given(angles)
    def test_canonicalization_is_idempotent(self, value):
        a = Angle(value)
        self.assertTrue(0.0 <= a.value < math.pi)
        self.assertEqual(Angle(a.value), a)


class ComplementTests(SimpleTestCase):
    def test_examples(self):
        self.assertTrue(OpticsServices.complement(X).is_close(Y))
        self.assertTrue(OpticsServices.complement(Y).is_close(X))
        self.assertAlmostEqual(OpticsServices.complement(Angle(math.pi / 6)).value, 2 * math.pi / 3, places=12)

    @given(angles)
    def test_involution(self, value):
        a = Angle(value)
        twice = OpticsServices.complement(OpticsServices.complement(a))
        self.assertTrue(twice.is_close(a))
        self.assertAlmostEqual(OpticsServices.complement(a).distance(a), math.pi / 2, places=12)


class MalusTests(SimpleTestCase):
    def test_examples(self):
        self.assertEqual(OpticsServices.malus(Angle(0), Angle(0)), 1.0)
        self.assertAlmostEqual(OpticsServices.malus(Angle(0), Angle(math.pi / 2)), 0.0, places=12)
        self.assertAlmostEqual(OpticsServices.malus(Angle(math.pi / 6), Angle(math.pi / 3)), 0.75, places=12)

    @given(angles, angles)
    def test_bounds_and_symmetry(self, a, b):
        a, b = Angle(a), Angle(b)
        p = OpticsServices.malus(a, b)
        self.assertTrue(0.0 <= p <= 1.0)
        self.assertAlmostEqual(p, OpticsServices.malus(b, a), delta=1e-12)
        self.assertAlmostEqual(p + OpticsServices.malus(OpticsServices.complement(a), b), 1.0, delta=1e-12)

    @settings(max_examples=200)
    @given(angles, angles, angles)
    def test_rotation_covariance(self, a, b, delta):
        a, b = Angle(a), Angle(b)
        self.assertAlmostEqual(
            OpticsServices.malus(a.rotated(delta), b.rotated(delta)),
            OpticsServices.malus(a, b),
            delta=1e-12,
        )


class StageServicesTests(SimpleTestCase):
    def setUp(self):
        self.theta = Angle.from_degrees(30)
        self.phi = Angle.from_degrees(60)

    def test_canonical_forms(self):
        stage1, stage2, stage3 = StageServices.canonical_stages(self.theta, self.phi)

        self.assertEqual(stage1.label, StageLabel.STAGE1)
        self.assertEqual(stage1.left_outcome, Y)
        self.assertEqual(
            [loop.blocker for loop in stage1.right_chain],
            [Blocker.OPEN, Blocker.OPEN, Blocker.BLOCK_MINUS],
        )

        self.assertEqual(stage2.left_outcome, X)
        self.assertEqual(
            [loop.blocker for loop in stage2.right_chain],
            [Blocker.OPEN, Blocker.BLOCK_MINUS, Blocker.OPEN],
        )

        self.assertTrue(stage3.left_outcome.is_close(Angle.from_degrees(120)))
        self.assertEqual([loop.axis for loop in stage3.right_chain], [X, self.theta, self.phi])

    def test_canonical_stage_by_label(self):
        stage = StageServices.canonical_stage('STAGE2', self.theta, self.phi)
        self.assertEqual(stage, StageServices.stage2(self.theta, self.phi))
        with self.assertRaises(ValueError):
            StageServices.canonical_stage(StageLabel.CUSTOM, self.theta, self.phi)

    def test_payload_round_trip_keeps_stage(self):
        stage = StageServices.stage3(self.theta, self.phi)
        self.assertEqual(type(stage).from_payload(stage.to_payload()), stage)

    def test_rotation_moves_every_axis(self):
        stage = StageServices.stage1(self.theta, self.phi).rotated(math.pi / 4)
        self.assertTrue(stage.left_outcome.is_close(Angle.from_degrees(135)))
        self.assertTrue(stage.right_chain[1].axis.is_close(Angle.from_degrees(75)))
        self.assertEqual(stage.label, StageLabel.CUSTOM)


class FractionReportTests(SimpleTestCase):
    def test_components_must_sum_to_coarse(self):
        FractionReport(coarse=0.25, components={'PPP': 0.1875, 'PMP': 0.0625})
        with self.assertRaises(ValidationError):
            FractionReport(coarse=0.3, components={'PPP': 0.1875, 'PMP': 0.0625})

    def test_component_sum_marginalizes(self):
        report = FractionReport(coarse=1.0, components={'PP': 0.5, 'MP': 0.3, 'MM': 0.2})
        self.assertAlmostEqual(report.component_sum({0: 'M'}), 0.5, places=12)
        self.assertAlmostEqual(report.component_sum({1: 'P'}), 0.8, places=12)

    def test_component_sum_needs_components(self):
        with self.assertRaises(ValidationError):
            FractionReport(coarse=0.5).component_sum({0: 'P'})

    def test_loop_defaults_open(self):
        self.assertEqual(LoopSpec(X).blocker, Blocker.OPEN)
