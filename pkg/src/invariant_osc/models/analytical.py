"""Closed-form dynamics exposed through the learned-model output contract."""

import numpy as np

from invariant_osc.autodiff import Tensor
from invariant_osc.dynamics.arm import ArmModel
from invariant_osc.dynamics.rigid_body import (
    gravity_torque,
    mass_matrix,
    mass_matrix_derivatives,
    potential_energy,
)
from invariant_osc.models.delan import DelanOutput


class AnalyticalModel:
    """Oracle model; ``mass_scale`` multiplies H (and dH) but not g."""

    def __init__(self, arm: ArmModel, mass_scale: float = 1.0) -> None:
        self.arm = arm
        self.mass_scale = mass_scale

    def forward(self, q: Tensor, history: Tensor | None = None) -> DelanOutput:
        rows = q.value
        H = np.stack([mass_matrix(self.arm, qi) for qi in rows])
        dH = np.stack([mass_matrix_derivatives(self.arm, qi) for qi in rows])
        V = np.array([potential_energy(self.arm, qi) for qi in rows])
        g = np.stack([gravity_torque(self.arm, qi) for qi in rows])
        return DelanOutput(
            H=Tensor(self.mass_scale * H),
            dH=Tensor(self.mass_scale * dH),
            V=Tensor(V),
            g=Tensor(g),
        )

    def parameters(self) -> dict[str, Tensor]:
        return {}
