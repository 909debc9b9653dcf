from dataclasses import dataclass

from optics.values import Angle


@dataclass(frozen=True)
class PureState:
    """Linear polarization of the right-moving photon."""

    axis: Angle
