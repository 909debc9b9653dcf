import math

from optics.values import Angle


class OpticsServices:
    """
    Elementary linear-polarization rules shared by every engine.
    """

    @classmethod
    def complement(cls, angle: Angle) -> Angle:
        """
        Orthogonal complement of an axis, the axis rotated by 90 degrees.

        :param angle: Polarization axis.
        :type angle: Angle
        :return: Canonical complement axis.
        :rtype: Angle
        """
        return Angle(angle.value + math.pi / 2)

    @classmethod
    def malus(cls, a: Angle, b: Angle) -> float:
        """
        Probability that a photon polarized along `b` passes an analyzer along `a`.

        :param a: Analyzer axis.
        :type a: Angle
        :param b: Photon polarization axis.
        :type b: Angle
        :return: cos^2(a - b), clamped to [0, 1].
        :rtype: float
        """
        p = math.cos(a.value - b.value) ** 2
        return min(1.0, max(0.0, p))
