"""Mass-matrix providers: where a controller gets H(q) and the coriolis-gravity torque."""

from typing import Protocol, runtime_checkable

import numpy as np

from invariant_osc.autodiff import Tensor, no_grad
from invariant_osc.dynamics.arm import ArmModel
from invariant_osc.dynamics.rigid_body import (
    com_jacobians,
    coriolis_torque,
    gravity_torque,
    mass_matrix,
)
from invariant_osc.models.delan import PdGuard, coriolis_gravity
from invariant_osc.models.composed import DynamicsModel


@runtime_checkable
class MassProvider(Protocol):
    name: str

    def reset(self, episode_arm: ArmModel) -> None: ...

    def evaluate(
        self, q: np.ndarray, qd: np.ndarray, history: np.ndarray | None
    ) -> tuple[np.ndarray, np.ndarray]:
        """Return (H, tau_cg) at one state."""
        ...


def gravity_comp_baseline(model: ArmModel, q: np.ndarray) -> np.ndarray:
    """Rough gravity compensation: sum_i J_i^T (-m_i g) over link centres of mass."""
    masses = model.arrays.masses
    jc = com_jacobians(model, q)
    tau = np.zeros(model.dof)
    for i in range(model.dof):
        tau -= jc[i].T @ (masses[i] * model.gravity_vector)
    return tau


class AnalyticalProvider:
    """Exact dynamics of the episode's arm (privileged information).

    With ``fixed`` set the provider keeps that arm instead of following resets.
    """

    name = "analytical"

    def __init__(self, fixed: ArmModel | None = None) -> None:
        self._fixed = fixed
        self.arm = fixed

    def reset(self, episode_arm: ArmModel) -> None:
        if self._fixed is None:
            self.arm = episode_arm

    def evaluate(
        self, q: np.ndarray, qd: np.ndarray, history: np.ndarray | None = None
    ) -> tuple[np.ndarray, np.ndarray]:
        if self.arm is None:
            raise RuntimeError("AnalyticalProvider used before reset()")
        H = mass_matrix(self.arm, q)
        return H, coriolis_torque(self.arm, q, qd) + gravity_torque(self.arm, q)


class IdentityProvider:
    """H = I with rough gravity compensation from the nominal link masses."""

    name = "identity"

    def __init__(self, nominal: ArmModel) -> None:
        self.nominal = nominal

    def reset(self, episode_arm: ArmModel) -> None:
        pass

    def evaluate(
        self, q: np.ndarray, qd: np.ndarray, history: np.ndarray | None = None
    ) -> tuple[np.ndarray, np.ndarray]:
        return np.eye(self.nominal.dof), gravity_comp_baseline(self.nominal, q)


class LearnedProvider:
    """A learned dynamics model evaluated on a frozen weight snapshot."""

    name = "learned"

    def __init__(self, model: DynamicsModel, guard: PdGuard | None = None) -> None:
        self.model = model
        self.guard = guard or PdGuard()
        self.activations = 0
        self.evaluations = 0

    def reset(self, episode_arm: ArmModel) -> None:
        pass

    def evaluate(
        self, q: np.ndarray, qd: np.ndarray, history: np.ndarray | None = None
    ) -> tuple[np.ndarray, np.ndarray]:
        with no_grad():
            hist = None if history is None else Tensor(history[None])
            out = self.model.forward(Tensor(q[None]), hist)
            tau_cg = coriolis_gravity(out, Tensor(qd[None])).value[0]
        H = out.H.value[0]
        guarded = self.guard.apply(H)
        self.evaluations += 1
        self.activations += int(np.any(guarded != H))
        return guarded, tau_cg
