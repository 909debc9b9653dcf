import math
from dataclasses import dataclass, field
from typing import Optional

from django.core.exceptions import ValidationError

from optics.models import Blocker, StageLabel

TOLERANCE = 1e-12


def canonical_radians(value: float) -> float:
    """
    Reduce an axis angle to its representative in [0, pi).
    """
    if not math.isfinite(value):
        raise ValidationError(f'Angle must be finite, got {value}')
    reduced = math.fmod(value, math.pi)
    if reduced < 0.0:
        reduced += math.pi
    if reduced >= math.pi:
        reduced = 0.0
    return reduced


@dataclass(frozen=True)
class Angle:
    """
    Linear polarization axis measured from the x axis, in radians, modulo pi.
    """

    value: float

    def __post_init__(self):
        object.__setattr__(self, 'value', canonical_radians(float(self.value)))

    @classmethod
    def from_degrees(cls, degrees: float) -> 'Angle':
        return cls(math.radians(degrees))

    @property
    def degrees(self) -> float:
        return math.degrees(self.value)

    def rotated(self, delta: float) -> 'Angle':
        return Angle(self.value + delta)

    def distance(self, other: 'Angle') -> float:
        """
        Smallest separation between two axes, in [0, pi/2].
        """
        d = abs(self.value - other.value)
        return min(d, math.pi - d)

    def is_close(self, other: 'Angle', tolerance: float = TOLERANCE) -> bool:
        return self.distance(other) <= tolerance


X = Angle(0.0)
Y = Angle(math.pi / 2)


@dataclass(frozen=True)
class LoopSpec:
    axis: Angle
    blocker: Blocker = Blocker.OPEN

    def rotated(self, delta: float) -> 'LoopSpec':
        return LoopSpec(axis=self.axis.rotated(delta), blocker=self.blocker)


@dataclass(frozen=True)
class StageSpec:
    left_outcome: Angle
    right_chain: tuple[LoopSpec, ...] = ()
    label: StageLabel = StageLabel.CUSTOM

    def __post_init__(self):
        object.__setattr__(self, 'right_chain', tuple(self.right_chain))

    def rotated(self, delta: float) -> 'StageSpec':
        """
        Rotate the left outcome and every loop axis by the same angle.
        """
        return StageSpec(
            left_outcome=self.left_outcome.rotated(delta),
            right_chain=tuple(loop.rotated(delta) for loop in self.right_chain),
            label=StageLabel.CUSTOM,
        )

    def with_loop_inserted(self, index: int, loop: LoopSpec) -> 'StageSpec':
        chain = list(self.right_chain)
        chain.insert(index, loop)
        return StageSpec(left_outcome=self.left_outcome, right_chain=tuple(chain), label=StageLabel.CUSTOM)

    def to_payload(self) -> dict:
        """
        JSON-safe form, used to ship a stage to a Celery task.
        """
        return {
            'left_outcome': self.left_outcome.value,
            'right_chain': [[loop.axis.value, str(loop.blocker)] for loop in self.right_chain],
            'label': str(self.label),
        }

    @classmethod
    def from_payload(cls, payload: dict) -> 'StageSpec':
        return cls(
            left_outcome=Angle(payload['left_outcome']),
            right_chain=tuple(
                LoopSpec(axis=Angle(axis), blocker=Blocker(blocker))
                for axis, blocker in payload['right_chain']
            ),
            label=StageLabel(payload['label']),
        )


@dataclass(frozen=True)
class FractionReport:
    """
    Coarse detection fraction plus, for hidden-variable engines, its which-path components.

    Components are keyed by channel sequence, one `P`/`M` letter per loop.
    """

    coarse: float
    components: Optional[dict[str, float]] = field(default=None)

    def __post_init__(self):
        if not -TOLERANCE <= self.coarse <= 1.0 + TOLERANCE:
            raise ValidationError(f'Coarse fraction out of range: {self.coarse}')
        if self.components is None:
            return
        for key, value in self.components.items():
            if not -TOLERANCE <= value <= 1.0 + TOLERANCE:
                raise ValidationError(f'Component {key!r} out of range: {value}')
        total = math.fsum(self.components.values())
        if abs(total - self.coarse) > TOLERANCE:
            raise ValidationError(f'Components sum to {total}, expected {self.coarse}')

    def component_sum(self, fixed: dict[int, str]) -> float:
        """
        Sum the components whose channel at each given loop index matches.

        :param fixed: Mapping of loop index to channel letter.
        :type fixed: dict[int, str]
        :return: Marginal probability.
        :rtype: float
        """
        if self.components is None:
            raise ValidationError('Report carries no which-path components')
        return math.fsum(
            p for seq, p in self.components.items()
            if all(len(seq) > i and seq[i] == channel for i, channel in fixed.items())
        )
