"""Operational space control law."""

import math
from dataclasses import dataclass

import numpy as np

from invariant_osc.control.providers import MassProvider
from invariant_osc.dynamics.arm import TASK_DIM, ArmModel
from invariant_osc.dynamics.rigid_body import end_effector, jacobian
from invariant_osc.errors import NonFiniteError

DEFAULT_DAMPING = 1e-2
DEFAULT_TAU_MAX = 50.0


@dataclass(frozen=True)
class OscCommand:
    """Task-space target with per-axis stiffness (1/s^2) and damping (1/s).

    ``xdd_d`` is a reference acceleration (m/s^2) added to the task force;
    it defaults to zero.
    """

    x_d: np.ndarray
    xd_d: np.ndarray
    kp: np.ndarray
    kv: np.ndarray
    xdd_d: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.xdd_d is None:
            object.__setattr__(self, "xdd_d", np.zeros(TASK_DIM))
        for name in ("x_d", "xd_d", "kp", "kv", "xdd_d"):
            value = np.asarray(getattr(self, name), dtype=np.float64)
            if value.shape != (TASK_DIM,):
                raise ValueError(f"{name} must be a {TASK_DIM}-vector, got shape {value.shape}")
            if not np.all(np.isfinite(value)):
                raise ValueError(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, value)
        if np.any(self.kp < 0) or np.any(self.kv < 0):
            raise ValueError(f"kp and kv must be non-negative, got kp={self.kp}, kv={self.kv}")


def critical_gains(kp: float, damping_ratio: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Per-axis (kp, kv) with kv = damping_ratio * 2 sqrt(kp)."""
    if kp < 0 or damping_ratio < 0:
        raise ValueError(f"kp and damping_ratio must be non-negative, got {kp}, {damping_ratio}")
    kv = damping_ratio * 2.0 * math.sqrt(kp)
    return np.full(TASK_DIM, float(kp)), np.full(TASK_DIM, kv)


def task_inertia(
    J: np.ndarray, H: np.ndarray, damping: float = DEFAULT_DAMPING, check: bool = False
) -> np.ndarray:
    """Lambda = (J H^-1 J^T + damping^2 I)^-1."""
    inv_lambda = J @ np.linalg.solve(H, J.T) + damping**2 * np.eye(J.shape[0])
    lam = np.linalg.inv(inv_lambda)
    lam = 0.5 * (lam + lam.T)
    if check:
        # Raises LinAlgError when Lambda is not positive definite.
        np.linalg.cholesky(lam)
    return lam


def osc_torque(
    provider: MassProvider,
    kinematics: ArmModel,
    q: np.ndarray,
    qd: np.ndarray,
    cmd: OscCommand,
    *,
    history: np.ndarray | None = None,
    kv_sign: int = 1,
    damping: float = DEFAULT_DAMPING,
    tau_max: float = DEFAULT_TAU_MAX,
    check: bool = False,
) -> np.ndarray:
    """tau = J^T Lambda (xdd_d + kp (x_d - x) + kv_sign kv (xd_d - xd)) + tau_cg, clamped."""
    H, tau_cg = provider.evaluate(q, qd, history)
    if not (np.all(np.isfinite(H)) and np.all(np.isfinite(tau_cg))):
        raise NonFiniteError(f"{provider.name} provider returned non-finite H or tau_cg")
    x, xd = end_effector(kinematics, q, qd)
    J = jacobian(kinematics, q)
    force = cmd.xdd_d + cmd.kp * (cmd.x_d - x) + kv_sign * cmd.kv * (cmd.xd_d - xd)
    tau = J.T @ (task_inertia(J, H, damping, check=check) @ force) + tau_cg
    return np.clip(tau, -tau_max, tau_max)
