"""Planar N-link arm model and closed-form rigid-body dynamics."""

from invariant_osc.dynamics.arm import (
    TASK_DIM,
    ArmModel,
    JointState,
    LinkParams,
    Payload,
    default_arm,
)
from invariant_osc.dynamics.rigid_body import (
    coriolis_torque,
    end_effector,
    forward_dynamics,
    friction_torque,
    gravity_torque,
    ik_solve,
    inverse_dynamics,
    jacobian,
    mass_matrix,
    total_energy,
)

__all__ = [
    "TASK_DIM",
    "ArmModel",
    "JointState",
    "LinkParams",
    "Payload",
    "coriolis_torque",
    "default_arm",
    "end_effector",
    "forward_dynamics",
    "friction_torque",
    "gravity_torque",
    "ik_solve",
    "inverse_dynamics",
    "jacobian",
    "mass_matrix",
    "total_energy",
]
