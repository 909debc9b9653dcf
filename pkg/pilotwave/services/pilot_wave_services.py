import math

from optics.models import Blocker, Channel
from optics.services.optics_services import OpticsServices
from optics.values import Angle, FractionReport, LoopSpec, StageSpec


class PilotWaveServices:
    """
    Closed forms of the pilot-wave model.

    The photon takes a definite channel in every loop, chosen with the Malus
    probability against the current guiding wave, while an empty wave takes
    the other channel. An open loop recombines photon and empty wave, so the
    guiding wave leaves with the polarization it entered with. A blocked
    loop absorbs whatever takes the blocked channel; a survivor is guided
    by the open channel's axis from then on.
    """

    @classmethod
    def is_absorbed(cls, loop: LoopSpec, channel: str) -> bool:
        if loop.blocker == Blocker.BLOCK_MINUS:
            return channel == Channel.MINUS
        if loop.blocker == Blocker.BLOCK_PLUS:
            return channel == Channel.PLUS
        return False

    @classmethod
    def channel_axis(cls, loop: LoopSpec, channel: str) -> Angle:
        if channel == Channel.PLUS:
            return loop.axis
        return OpticsServices.complement(loop.axis)

    @classmethod
    def guide_after(cls, loop: LoopSpec, channel: str, guide: Angle) -> Angle:
        """
        Guiding polarization leaving a loop the photon survived.
        """
        if loop.blocker == Blocker.OPEN:
            return guide
        return cls.channel_axis(loop, channel)

    @classmethod
    def initial_guide(cls, stage: StageSpec) -> Angle:
        return OpticsServices.complement(stage.left_outcome)

    @classmethod
    def branch_probabilities(cls, guide: Angle, chain: tuple[LoopSpec, ...]) -> dict[str, float]:
        """
        Probability of every detected channel sequence for a photon entering the chain with `guide`.

        Sequences that end in a blocked channel are dropped. Zero-probability
        detected sequences are kept, so the table always has the same keys
        for a given chain.

        :param guide: Guiding polarization entering the first loop.
        :type guide: Angle
        :param chain: Loops in the order the photon meets them.
        :type chain: tuple[LoopSpec, ...]
        :return: Channel sequence to probability.
        :rtype: dict[str, float]
        """
        # Guides are raw radians here; cos^2 is pi-periodic, so they need no canonicalization.
        steps = []
        for loop in chain:
            open_channels = [
                (str(channel), cls.channel_axis(loop, channel).value)
                for channel in (Channel.PLUS, Channel.MINUS)
                if not cls.is_absorbed(loop, channel)
            ]
            steps.append((open_channels, loop.blocker == Blocker.OPEN))

        branches = [('', 1.0, guide.value)]
        for open_channels, recombines in steps:
            branches = [
                (
                    channels + letter,
                    probability * math.cos(axis - current) ** 2,
                    current if recombines else axis,
                )
                for channels, probability, current in branches
                for letter, axis in open_channels
            ]
        return {channels: probability for channels, probability, _ in branches}

    @classmethod
    def pw_components(cls, stage: StageSpec) -> FractionReport:
        """
        Full which-path component table of a stage.

        An empty chain yields the single empty sequence with probability one.

        :param stage: Stage to evaluate.
        :type stage: StageSpec
        :return: Report with coarse fraction equal to the component sum.
        :rtype: FractionReport
        """
        components = cls.branch_probabilities(cls.initial_guide(stage), stage.right_chain)
        return FractionReport(coarse=math.fsum(components.values()), components=components)

    @classmethod
    def pw_coarse(cls, stage: StageSpec) -> float:
        return cls.pw_components(stage).coarse
