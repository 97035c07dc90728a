"""Operational space control, mass providers and joint-space baselines."""

from invariant_osc.control.controllers import (
    CONTROLLER_KINDS,
    ControlInput,
    Controller,
    OscController,
    WaypointFollower,
    build_controller,
)
from invariant_osc.control.osc import OscCommand, critical_gains, osc_torque, task_inertia
from invariant_osc.control.providers import (
    AnalyticalProvider,
    IdentityProvider,
    LearnedProvider,
    MassProvider,
    gravity_comp_baseline,
)

__all__ = [
    "CONTROLLER_KINDS",
    "AnalyticalProvider",
    "ControlInput",
    "Controller",
    "IdentityProvider",
    "LearnedProvider",
    "MassProvider",
    "OscCommand",
    "OscController",
    "WaypointFollower",
    "build_controller",
    "critical_gains",
    "gravity_comp_baseline",
    "osc_torque",
    "task_inertia",
]
