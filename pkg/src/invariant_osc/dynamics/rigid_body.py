"""Closed-form rigid-body dynamics of a planar revolute arm.

Joint j sits at the base of link j; link angles are cumulative sums of q.
For a planar revolute joint the velocity Jacobian column of a point p is the
z-axis cross product ``perp(p - o_j)`` with ``perp(x, y) = (-y, x)``.

All functions are pure and safe to call concurrently.
"""

import numpy as np

from invariant_osc.dynamics.arm import ArmModel

CORIOLIS_FD_STEP = 1e-6
COULOMB_SMOOTHING = 0.01


def _perp(v: np.ndarray) -> np.ndarray:
    """Rotate planar vectors (last axis) by +90 degrees."""
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


def _unit_vectors(q: np.ndarray) -> np.ndarray:
    """Link directions.

    Args:
        q: Joint angles (rad), shape (N,).

    Returns:
        (N, 2) unit vectors at the cumulative angles of q.
    """
    theta = np.cumsum(q)
    return np.stack([np.cos(theta), np.sin(theta)], axis=-1)


def joint_origins(model: ArmModel, q: np.ndarray) -> np.ndarray:
    """Positions of the N joint axes, shape (N, 2); joint 0 at the base."""
    segments = model.arrays.lengths[:, None] * _unit_vectors(q)
    tips = np.cumsum(segments, axis=0)
    return np.vstack([np.zeros((1, 2)), tips[:-1]])


def com_positions(model: ArmModel, q: np.ndarray) -> np.ndarray:
    """Centre-of-mass positions of every (payload-folded) link, shape (N, 2)."""
    origins = joint_origins(model, q)
    return origins + model.arrays.com_offsets[:, None] * _unit_vectors(q)


def com_jacobians(model: ArmModel, q: np.ndarray) -> np.ndarray:
    """Position Jacobians of every link centre of mass, shape (N, 2, N)."""
    n = model.dof
    origins = joint_origins(model, q)
    coms = com_positions(model, q)
    cols = _perp(coms[:, None, :] - origins[None, :, :])  # (i, j, 2)
    mask = np.tril(np.ones((n, n)))
    return np.transpose(cols * mask[:, :, None], (0, 2, 1))


def end_effector(
    model: ArmModel, q: np.ndarray, qd: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Tip position and velocity of the arm.

    Args:
        model: Arm geometry.
        q: Joint angles (rad).
        qd: Joint velocities (rad/s); omit for position only.

    Returns:
        (x, xd): tip position (m) and velocity J qd (m/s); xd is zero when
        ``qd`` is omitted.
    """
    segments = model.arrays.lengths[:, None] * _unit_vectors(q)
    x = segments.sum(axis=0)
    if qd is None:
        return x, np.zeros(2)
    return x, jacobian(model, q) @ qd


def jacobian(model: ArmModel, q: np.ndarray) -> np.ndarray:
    """End-effector position Jacobian J = dx/dq, shape (2, N)."""
    x, _ = end_effector(model, q)
    return _perp(x[None, :] - joint_origins(model, q)).T


def mass_matrix(model: ArmModel, q: np.ndarray) -> np.ndarray:
    """Generalised inertia H(q) including armature and payload."""
    arrays = model.arrays
    n = model.dof
    jc = com_jacobians(model, q)
    translational = np.einsum("i,iaj,iak->jk", arrays.masses, jc, jc)
    rotational_cols = np.tril(np.ones((n, n)))
    rotational = np.einsum("i,ij,ik->jk", arrays.inertias, rotational_cols, rotational_cols)
    H = translational + rotational + np.diag(arrays.armature)
    return 0.5 * (H + H.T)


def mass_matrix_derivatives(
    model: ArmModel, q: np.ndarray, step: float = CORIOLIS_FD_STEP
) -> np.ndarray:
    """Central-difference derivative of the mass matrix.

    Args:
        model: Arm whose closed-form H is differenced.
        q: Joint angles (rad).
        step: Finite-difference step (rad).

    Returns:
        dH/dq_k, shape (N, N, N) with k on the last axis.
    """
    n = model.dof
    out = np.empty((n, n, n))
    for k in range(n):
        dq = np.zeros(n)
        dq[k] = step
        out[:, :, k] = (mass_matrix(model, q + dq) - mass_matrix(model, q - dq)) / (2 * step)
    return out


def potential_energy(model: ArmModel, q: np.ndarray) -> float:
    """V(q) = -sum_i m_i g . c_i (zero at the base height)."""
    coms = com_positions(model, q)
    return float(-np.sum(model.arrays.masses * (coms @ model.gravity_vector)))


def gravity_torque(model: ArmModel, q: np.ndarray) -> np.ndarray:
    """g(q) = dV/dq."""
    jc = com_jacobians(model, q)
    return -np.einsum("i,iaj,a->j", model.arrays.masses, jc, model.gravity_vector)


def coriolis_from_derivatives(dH: np.ndarray, qd: np.ndarray) -> np.ndarray:
    """Velocity-product torque from mass-matrix derivatives.

    Args:
        dH: dH/dq_k stacked on the last axis, shape (N, N, N).
        qd: Joint velocities (rad/s).

    Returns:
        Hdot qd - 1/2 (d/dq (qd^T H qd))^T in N·m.
    """
    H_dot = dH @ qd
    quadratic = np.einsum("i,ijk,j->k", qd, dH, qd)
    return H_dot @ qd - 0.5 * quadratic


def coriolis_torque(model: ArmModel, q: np.ndarray, qd: np.ndarray) -> np.ndarray:
    """c(q, qd) with dH/dq from central differences."""
    return coriolis_from_derivatives(mass_matrix_derivatives(model, q), qd)


def friction_torque(model: ArmModel, qd: np.ndarray) -> np.ndarray:
    """Viscous plus tanh-smoothed Coulomb joint friction."""
    arrays = model.arrays
    return arrays.viscous * qd + arrays.coulomb * np.tanh(qd / COULOMB_SMOOTHING)


def inverse_dynamics(
    model: ArmModel, q: np.ndarray, qd: np.ndarray, qdd: np.ndarray
) -> np.ndarray:
    """Conservative torque H qdd + c + g; friction is handled by the caller."""
    return mass_matrix(model, q) @ qdd + coriolis_torque(model, q, qd) + gravity_torque(model, q)


def forward_dynamics(
    model: ArmModel, q: np.ndarray, qd: np.ndarray, tau: np.ndarray
) -> np.ndarray:
    """qdd = H^-1 (tau - friction - c - g).

    Args:
        model: Episode arm, friction included.
        q: Joint angles (rad).
        qd: Joint velocities (rad/s).
        tau: Applied joint torques (N·m).

    Returns:
        Joint accelerations (rad/s^2).
    """
    rhs = (
        tau
        - friction_torque(model, qd)
        - coriolis_torque(model, q, qd)
        - gravity_torque(model, q)
    )
    return np.linalg.solve(mass_matrix(model, q), rhs)


def kinetic_energy(model: ArmModel, q: np.ndarray, qd: np.ndarray) -> float:
    return float(0.5 * qd @ mass_matrix(model, q) @ qd)


def total_energy(model: ArmModel, q: np.ndarray, qd: np.ndarray) -> float:
    return kinetic_energy(model, q, qd) + potential_energy(model, q)


def reachable_annulus(model: ArmModel, margin: float = 0.15) -> tuple[float, float]:
    """Inner and outer radius of a conservative reachable workspace.

    Args:
        model: Arm whose link lengths bound the workspace.
        margin: Fraction of the radial span kept clear of full extension.

    Returns:
        (inner, outer) radii in m; inner always keeps 20% of the span clear.
    """
    lengths = model.arrays.lengths
    outer = lengths.sum()
    inner = max(0.0, lengths[0] - lengths[1:].sum())
    span = outer - inner
    return inner + 0.2 * span, outer - margin * span


def dls_increment(J: np.ndarray, dx: np.ndarray, damping: float) -> np.ndarray:
    """Damped least squares: dq = J^T (J J^T + damping^2 I)^-1 dx."""
    m = J.shape[0]
    return J.T @ np.linalg.solve(J @ J.T + damping**2 * np.eye(m), dx)


def ik_solve(
    model: ArmModel,
    q0: np.ndarray,
    x_target: np.ndarray,
    *,
    damping: float = 1e-3,
    iterations: int = 200,
    tol: float = 1e-12,
) -> np.ndarray:
    """Iterated damped least squares from ``q0``.

    Args:
        model: Arm kinematics.
        q0: Starting joint angles; picks the solution branch.
        x_target: Tip position to reach (m).
        damping: DLS damping.
        iterations: Iteration cap.
        tol: Stop once the tip is within this distance (m).

    Returns:
        The last iterate, whether or not it converged.
    """
    q = np.array(q0, dtype=np.float64)
    for _ in range(iterations):
        x, _ = end_effector(model, q)
        dx = x_target - x
        if float(dx @ dx) < tol**2:
            break
        q = q + dls_increment(jacobian(model, q), dx, damping)
    return q
