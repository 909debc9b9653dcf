from dataclasses import asdict, dataclass
from typing import Optional

from optics.values import Angle


@dataclass(frozen=True)
class InequalityReport:
    """
    Every quantity of the Bell-inequality derivation at one (theta, phi).

    Coarse fractions are the observed ones; the `*_theta_phi*` components
    come from the pilot-wave decomposition of each stage.
    """

    theta: Angle
    phi: Angle
    theta_deg: float
    phi_deg: float
    f1_coarse: float
    f1_xtheta_phi: float
    f1_xthetabar_phi: float
    f2_coarse: float
    f2_ytheta_phi: float
    f2_ytheta_phibar: float
    f3_coarse: float
    f3_xtheta_phi: float
    f3_ytheta_phi: float
    eq4_lhs: float
    eq4_rhs: float
    eq5_rhs: float
    eq5_residual: float
    eq6_lhs: float
    eq6_rhs: float
    eq6_satisfied: bool
    identification_gap: float
    tolerance: float

    @property
    def violation(self) -> float:
        """
        Amount by which the inequality fails; negative when it holds.
        """
        return self.eq6_rhs - self.eq6_lhs

    def as_row(self) -> dict:
        row = asdict(self)
        row.pop('theta')
        row.pop('phi')
        return row


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class RunConfig:
    command: str
    theta_deg: float = 30.0
    phi_deg: float = 60.0
    step_deg: float = 1.0
    model: str = 'closed_form'
    n: int = 100000
    seed: int = 0
    seed_source: str = 'default'
    workers: int = 1
    stage: Optional[str] = None
    format: str = 'csv'
    output: Optional[str] = None
