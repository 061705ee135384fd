"""Default numeric tolerances.

Every report produced by the solvers and the CLI echoes the tolerance set
that was in effect, so these values are auditable after the fact.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

TRIANGLE_SLACK = 1e-12
TAU_TIE = 1e-9
TAU_ANG = 1e-6
TAU_GRAD = 1e-10
TAU_LEN = 1e-10
EPS_DEG = 1e-9
MU_MARGIN = 1e-6
FILLING_SLACK = 1e-12


@dataclass(frozen=True)
class Tolerances:
    tie: float = TAU_TIE
    angle: float = TAU_ANG
    grad: float = TAU_GRAD
    deg: float = EPS_DEG
    margin: float = MU_MARGIN

    def with_(self, **changes) -> "Tolerances":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})

    def as_dict(self) -> dict:
        return {
            "tau_tie": self.tie,
            "tau_ang": self.angle,
            "tau_grad": self.grad,
            "eps_deg": self.deg,
            "mu_margin": self.margin,
        }


DEFAULT = Tolerances()

__all__ = ["Tolerances", "DEFAULT"]
