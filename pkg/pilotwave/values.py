import math
from dataclasses import dataclass, field

from optics.values import Angle, FractionReport


@dataclass(frozen=True)
class Trajectory:
    """
    One photon's path through the right arm: the channel taken in each loop reached.
    """

    left_outcome: Angle
    channel_record: str
    detected: bool


@dataclass(frozen=True)
class McResult:
    """
    Outcome of a Monte Carlo run.

    `counts` holds detected trajectories keyed by their full channel
    sequence; `undetected` holds absorbed ones keyed by the prefix up to
    and including the blocked channel that absorbed them.
    """

    label: str
    n: int
    n_conditioned: int
    seed: int
    counts: dict[str, int] = field(default_factory=dict)
    undetected: dict[str, int] = field(default_factory=dict)

    @property
    def n_detected(self) -> int:
        return sum(self.counts.values())

    def frequency(self, channels: str) -> float:
        if self.n_conditioned == 0:
            return 0.0
        return self.counts.get(channels, 0) / self.n_conditioned

    def stderr(self, channels: str) -> float:
        if self.n_conditioned == 0:
            return 0.0
        p = self.frequency(channels)
        return math.sqrt(p * (1.0 - p) / self.n_conditioned)

    @property
    def detection_frequency(self) -> float:
        if self.n_conditioned == 0:
            return 0.0
        return self.n_detected / self.n_conditioned

    @property
    def detection_stderr(self) -> float:
        if self.n_conditioned == 0:
            return 0.0
        p = self.detection_frequency
        return math.sqrt(p * (1.0 - p) / self.n_conditioned)

    def fraction_report(self) -> FractionReport:
        """
        Observed frequencies as a FractionReport, components keyed like the closed form.
        """
        components = {channels: self.frequency(channels) for channels in self.counts}
        return FractionReport(coarse=math.fsum(components.values()), components=components)

    def to_dict(self) -> dict:
        return {
            'label': self.label,
            'n': self.n,
            'n_conditioned': self.n_conditioned,
            'seed': self.seed,
            'counts': dict(sorted(self.counts.items())),
            'undetected': dict(sorted(self.undetected.items())),
        }
