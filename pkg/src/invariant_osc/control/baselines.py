"""Joint-space baselines: PD to an IK target and one-step damped least squares."""

import numpy as np

from invariant_osc.dynamics.arm import ArmModel
from invariant_osc.dynamics.rigid_body import dls_increment, end_effector, jacobian

DLS_DAMPING = 1e-2


def joint_pd_torque(
    q: np.ndarray,
    qd: np.ndarray,
    q_target: np.ndarray,
    kp: float | np.ndarray,
    kd: float | np.ndarray,
    tau_cg: np.ndarray,
    *,
    qd_target: np.ndarray | None = None,
    tau_max: float = 50.0,
) -> np.ndarray:
    """kp (q_target - q) + kd (qd_target - qd) + tau_cg, clamped."""
    qd_target = np.zeros_like(qd) if qd_target is None else qd_target
    tau = kp * (q_target - q) + kd * (qd_target - qd) + tau_cg
    return np.clip(tau, -tau_max, tau_max)


def ik_dls_step(
    model: ArmModel, q: np.ndarray, x_d: np.ndarray, damping: float = DLS_DAMPING
) -> np.ndarray:
    """q + J^T (J J^T + damping^2 I)^-1 (x_d - x)."""
    x, _ = end_effector(model, q)
    return q + dls_increment(jacobian(model, q), x_d - x, damping)
