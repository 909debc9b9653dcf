import logging
import math
from typing import Iterable

import numpy as np

from optics.models import Blocker
from optics.services.optics_services import OpticsServices
from optics.values import Angle, FractionReport, LoopSpec, StageSpec, X
from quantum.values import PureState

logger = logging.getLogger(__name__)


class QuantumServices:
    """
    Exact quantum-mechanical detection fractions for the right arm.

    The two-photon source is the polarization singlet. A left detection
    collapses the right photon onto the complement axis; each blocked loop
    then acts as a projector onto its open channel.
    """

    @classmethod
    def jones_vector(cls, axis: Angle) -> np.ndarray:
        return np.array([math.cos(axis.value), math.sin(axis.value)])

    @classmethod
    def projector(cls, axis: Angle) -> np.ndarray:
        """
        Jones projector |a><a| onto a linear polarization axis.
        """
        v = cls.jones_vector(axis)
        return np.outer(v, v)

    @classmethod
    def singlet_state(cls, basis: Angle) -> np.ndarray:
        """
        Two-photon singlet (|a>|a_bar> - |a_bar>|a>)/sqrt(2) written in the basis of `basis`.

        The result is the same vector for every basis up to a global sign
        (an axis fixes its Jones vector only up to sign), which is what lets
        every stage condition on an arbitrary left axis.

        :param basis: Axis a of the expansion basis.
        :type basis: Angle
        :return: Amplitudes over |x>|x>, |x>|y>, |y>|x>, |y>|y>.
        :rtype: np.ndarray
        """
        a = cls.jones_vector(basis)
        a_bar = cls.jones_vector(OpticsServices.complement(basis))
        return (np.kron(a, a_bar) - np.kron(a_bar, a)) / math.sqrt(2.0)

    @classmethod
    def condition_on_left(cls, left_outcome: Angle) -> tuple[PureState, float]:
        """
        Post-select the singlet on a left detection along `left_outcome`.

        :param left_outcome: Polarization detected on the left.
        :type left_outcome: Angle
        :return: Collapsed right-photon state and the probability of the left outcome.
        :rtype: tuple[PureState, float]
        """
        left = cls.jones_vector(left_outcome)
        # Contract the left factor of the two-photon amplitude with <left|.
        right_amplitude = left @ cls.singlet_state(X).reshape(2, 2)
        probability = float(right_amplitude @ right_amplitude)
        return PureState(axis=OpticsServices.complement(left_outcome)), probability

    @classmethod
    def propagate(cls, state: PureState, loop: LoopSpec) -> tuple[PureState, float]:
        """
        Pass a photon through one analyzer loop.

        An open loop recombines both channels into the original beam and is
        transparent. A blocked loop absorbs the blocked channel and projects
        the survivor onto the open one.

        :param state: Incoming polarization.
        :type state: PureState
        :param loop: Loop axis and blocker.
        :type loop: LoopSpec
        :return: Outgoing state and survival probability.
        :rtype: tuple[PureState, float]
        """
        if loop.blocker == Blocker.OPEN:
            return state, 1.0

        if loop.blocker == Blocker.BLOCK_MINUS:
            open_axis = loop.axis
        else:
            open_axis = OpticsServices.complement(loop.axis)

        projected = cls.projector(open_axis) @ cls.jones_vector(state.axis)
        survival = min(1.0, float(projected @ projected))
        return PureState(axis=open_axis), survival

    @classmethod
    def chain_fraction(cls, state: PureState, chain: Iterable[LoopSpec]) -> float:
        """
        Product of survival probabilities of a photon through a chain of loops.
        """
        fraction = 1.0
        for loop in chain:
            state, survival = cls.propagate(state, loop)
            fraction *= survival
            if fraction == 0.0:
                break
        return fraction

    @classmethod
    def single_particle_fraction(cls, axis: Angle, chain: Iterable[LoopSpec]) -> float:
        """
        Detection fraction for a bare photon of polarization `axis`, with no partner and no post-selection.
        """
        return cls.chain_fraction(PureState(axis=axis), chain)

    @classmethod
    def stage_fraction_qm(cls, stage: StageSpec) -> FractionReport:
        """
        Fraction of left detections accompanied by a right detection.

        The left-outcome probability is the denominator and so does not
        enter the fraction. No which-path components are reported: nothing
        records the channel taken inside an open loop.

        :param stage: Stage to evaluate.
        :type stage: StageSpec
        :return: Report with `coarse` only.
        :rtype: FractionReport
        """
        state, _ = cls.condition_on_left(stage.left_outcome)
        return FractionReport(coarse=cls.chain_fraction(state, stage.right_chain))
