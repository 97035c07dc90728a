"""Controllers driven by a scripted waypoint follower.

Every controller sees the same ControlInput per control step: the current
joint state, the task-space command and the history window of the K
previous control steps.
"""

import math
from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np

from invariant_osc.control.baselines import DLS_DAMPING, ik_dls_step, joint_pd_torque
from invariant_osc.control.osc import (
    DEFAULT_DAMPING,
    DEFAULT_TAU_MAX,
    OscCommand,
    critical_gains,
    osc_torque,
)
from invariant_osc.control.providers import (
    AnalyticalProvider,
    IdentityProvider,
    LearnedProvider,
    MassProvider,
    gravity_comp_baseline,
)
from invariant_osc.dynamics.arm import ArmModel
from invariant_osc.dynamics.rigid_body import dls_increment, ik_solve, jacobian, mass_matrix
from invariant_osc.errors import ConfigError
from invariant_osc.models.composed import DynamicsModel
from invariant_osc.models.delan import PdGuard

CONTROLLER_KINDS = (
    "oscar",
    "analytical_osc",
    "identity_osc",
    "fixed_gain_osc",
    "joint_pd",
    "ik_dls",
)

# Kinds whose task-space gains are chosen by the sweep.
SWEPT_KINDS = ("oscar", "analytical_osc", "identity_osc")


@dataclass(frozen=True)
class ControlInput:
    q: np.ndarray
    qd: np.ndarray
    t: float
    command: OscCommand
    history: np.ndarray  # (K, 3N), rows t-K .. t-1
    waypoint: np.ndarray | None = None  # due when the step ends

    @property
    def target(self) -> np.ndarray:
        """Joint-space baselines aim at the due waypoint, else at the command point."""
        return self.command.x_d if self.waypoint is None else self.waypoint


@runtime_checkable
class Controller(Protocol):
    name: str

    def reset(self, episode_arm: ArmModel) -> None: ...

    def act(self, inp: ControlInput) -> np.ndarray: ...


@dataclass(frozen=True)
class WaypointFollower:
    """Scripted command source: the reference state with fixed gains.

    At a 0.05 s control period the defaults (kp = 1/T², damping ratio 0.75,
    so kv = 1.5/T) put both poles of a double integrator under zero-order
    hold at the origin: tracking errors die out within two control steps.
    """

    kp: float = 400.0
    damping_ratio: float = 0.75

    def command(
        self, x_d: np.ndarray, xd_d: np.ndarray, xdd_d: np.ndarray | None = None
    ) -> OscCommand:
        kp, kv = critical_gains(self.kp, self.damping_ratio)
        return OscCommand(x_d=x_d, xd_d=xd_d, kp=kp, kv=kv, xdd_d=xdd_d)


class OscController:
    """Operational space control with a pluggable mass provider."""

    def __init__(
        self,
        provider: MassProvider,
        kinematics: ArmModel,
        *,
        name: str | None = None,
        kv_sign: int = 1,
        damping: float = DEFAULT_DAMPING,
        tau_max: float = DEFAULT_TAU_MAX,
        check_inertia: bool = False,
    ) -> None:
        if kv_sign not in (1, -1):
            raise ValueError(f"kv_sign must be 1 or -1, got {kv_sign}")
        self.provider = provider
        self.kinematics = kinematics
        self.name = name or f"{provider.name}_osc"
        self.kv_sign = kv_sign
        self.damping = damping
        self.tau_max = tau_max
        self.check_inertia = check_inertia

    @property
    def guard_counts(self) -> tuple[int, int]:
        """(activations, evaluations) of this controller's PD guard; zero for exact providers."""
        return (
            getattr(self.provider, "activations", 0),
            getattr(self.provider, "evaluations", 0),
        )

    def reset(self, episode_arm: ArmModel) -> None:
        self.provider.reset(episode_arm)

    def act(self, inp: ControlInput) -> np.ndarray:
        return osc_torque(
            self.provider,
            self.kinematics,
            inp.q,
            inp.qd,
            inp.command,
            history=inp.history,
            kv_sign=self.kv_sign,
            damping=self.damping,
            tau_max=self.tau_max,
            check=self.check_inertia,
        )


class JointPdController:
    """Full IK to the commanded point, joint PD with rough gravity compensation.

    Gains are in 1/s^2 and 1/s; each joint's pair is multiplied by the nominal
    arm's diagonal inertia at the current posture.
    """

    name = "joint_pd"

    def __init__(
        self,
        nominal: ArmModel,
        *,
        kp: float = 100.0,
        damping_ratio: float = 1.0,
        tau_max: float = DEFAULT_TAU_MAX,
    ) -> None:
        self.nominal = nominal
        self.kp = kp
        self.kd = damping_ratio * 2.0 * math.sqrt(kp)
        self.tau_max = tau_max

    def reset(self, episode_arm: ArmModel) -> None:
        pass

    def _gains(self, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        inertia = np.diag(mass_matrix(self.nominal, q))
        return self.kp * inertia, self.kd * inertia

    def act(self, inp: ControlInput) -> np.ndarray:
        kp, kd = self._gains(inp.q)
        q_target = ik_solve(self.nominal, inp.q, inp.target, iterations=50, tol=1e-9)
        qd_target = dls_increment(jacobian(self.nominal, inp.q), inp.command.xd_d, DLS_DAMPING)
        return joint_pd_torque(
            inp.q,
            inp.qd,
            q_target,
            kp,
            kd,
            gravity_comp_baseline(self.nominal, inp.q),
            qd_target=qd_target,
            tau_max=self.tau_max,
        )


class IkDlsController(JointPdController):
    """One damped-least-squares step per control step, tracked by joint PD."""

    name = "ik_dls"

    def act(self, inp: ControlInput) -> np.ndarray:
        kp, kd = self._gains(inp.q)
        q_target = ik_dls_step(self.nominal, inp.q, inp.target)
        return joint_pd_torque(
            inp.q,
            inp.qd,
            q_target,
            kp,
            kd,
            gravity_comp_baseline(self.nominal, inp.q),
            tau_max=self.tau_max,
        )


class ZeroTorqueController:
    """Applies no torque; the arm falls under gravity."""

    name = "zero_torque"

    def reset(self, episode_arm: ArmModel) -> None:
        pass

    def act(self, inp: ControlInput) -> np.ndarray:
        return np.zeros_like(inp.q)


def build_controller(
    kind: str,
    nominal: ArmModel,
    *,
    model: DynamicsModel | None = None,
    guard: PdGuard | None = None,
    kv_sign: int = 1,
    damping: float = DEFAULT_DAMPING,
    tau_max: float = DEFAULT_TAU_MAX,
    joint_kp: float = 100.0,
    joint_damping_ratio: float = 1.0,
    check_inertia: bool = False,
) -> Controller:
    """Controller of ``kind`` for an arm whose nominal kinematics are known."""
    osc_options = {
        "kv_sign": kv_sign,
        "damping": damping,
        "tau_max": tau_max,
        "check_inertia": check_inertia,
    }
    if kind == "oscar":
        if model is None:
            raise ConfigError("controller 'oscar' needs a learned model")
        return OscController(LearnedProvider(model, guard), nominal, name=kind, **osc_options)
    if kind == "analytical_osc":
        return OscController(AnalyticalProvider(), nominal, name=kind, **osc_options)
    if kind in ("identity_osc", "fixed_gain_osc"):
        return OscController(IdentityProvider(nominal), nominal, name=kind, **osc_options)
    if kind == "joint_pd":
        return JointPdController(
            nominal, kp=joint_kp, damping_ratio=joint_damping_ratio, tau_max=tau_max
        )
    if kind == "ik_dls":
        return IkDlsController(
            nominal, kp=joint_kp, damping_ratio=joint_damping_ratio, tau_max=tau_max
        )
    raise ConfigError(f"controller kind must be one of {CONTROLLER_KINDS}, got {kind!r}")
