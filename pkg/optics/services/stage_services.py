from optics.models import Blocker, StageLabel
from optics.services.optics_services import OpticsServices
from optics.values import Angle, LoopSpec, StageSpec, X, Y


class StageServices:
    """
    Builds the three canonical stages of the five-loop arrangement.

    The right arm always holds the x, theta and phi loops in that order; the
    stages differ only in the left outcome post-selected on and in which
    channel is blocked.
    """

    @classmethod
    def stage1(cls, theta: Angle, phi: Angle) -> StageSpec:
        return StageSpec(
            left_outcome=Y,
            right_chain=(
                LoopSpec(X, Blocker.OPEN),
                LoopSpec(theta, Blocker.OPEN),
                LoopSpec(phi, Blocker.BLOCK_MINUS),
            ),
            label=StageLabel.STAGE1,
        )

    @classmethod
    def stage2(cls, theta: Angle, phi: Angle) -> StageSpec:
        return StageSpec(
            left_outcome=X,
            right_chain=(
                LoopSpec(X, Blocker.OPEN),
                LoopSpec(theta, Blocker.BLOCK_MINUS),
                LoopSpec(phi, Blocker.OPEN),
            ),
            label=StageLabel.STAGE2,
        )

    @classmethod
    def stage3(cls, theta: Angle, phi: Angle) -> StageSpec:
        return StageSpec(
            left_outcome=OpticsServices.complement(theta),
            right_chain=(
                LoopSpec(X, Blocker.OPEN),
                LoopSpec(theta, Blocker.OPEN),
                LoopSpec(phi, Blocker.BLOCK_MINUS),
            ),
            label=StageLabel.STAGE3,
        )

    @classmethod
    def canonical_stage(cls, label: str, theta: Angle, phi: Angle) -> StageSpec:
        """
        Build a canonical stage by label.

        :param label: One of the StageLabel values other than CUSTOM.
        :type label: str
        :param theta: Axis of the middle loop.
        :type theta: Angle
        :param phi: Axis of the last loop.
        :type phi: Angle
        :raises ValueError: If the label is not a canonical stage.
        :return: The stage specification.
        :rtype: StageSpec
        """
        builders = {
            StageLabel.STAGE1: cls.stage1,
            StageLabel.STAGE2: cls.stage2,
            StageLabel.STAGE3: cls.stage3,
        }
        builder = builders.get(StageLabel(label))
        if builder is None:
            raise ValueError(f'Not a canonical stage: {label}')
        return builder(theta, phi)

    @classmethod
    def canonical_stages(cls, theta: Angle, phi: Angle) -> list[StageSpec]:
        return [cls.stage1(theta, phi), cls.stage2(theta, phi), cls.stage3(theta, phi)]
