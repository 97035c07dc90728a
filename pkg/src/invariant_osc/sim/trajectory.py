"""Task-space waypoint trajectories: lines, circles and 2:3 Lissajous curves."""

import math
from dataclasses import dataclass

import numpy as np

from invariant_osc.dynamics.arm import ArmModel
from invariant_osc.dynamics.rigid_body import reachable_annulus
from invariant_osc.errors import ConfigError

TRAJECTORY_KINDS = ("line", "circle", "lissajous")

CIRCLE_RADIUS = (0.05, 0.2)
LISSAJOUS_AMPLITUDE = (0.05, 0.12)

_MAX_LINE_TRIES = 100


@dataclass(frozen=True)
class TrajectorySpec:
    """Start point plus H waypoints; waypoint i is due at ``times[i]``."""

    kind: str
    start: np.ndarray
    waypoints: np.ndarray
    times: np.ndarray

    def __post_init__(self) -> None:
        if self.kind not in TRAJECTORY_KINDS:
            raise ValueError(f"kind must be one of {TRAJECTORY_KINDS}, got {self.kind!r}")
        if len(self.waypoints) != len(self.times):
            raise ValueError("waypoints and times must have the same length")
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("trajectory times must be strictly increasing")

    @property
    def horizon(self) -> int:
        return len(self.waypoints)

    def reference(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Position, velocity and acceleration targets for every control step.

        Control step t starts on ``r[t]`` (the start point for t = 0, else
        waypoint t-1) and is due on waypoint t when it ends. Velocities are
        central differences of the points and zero at the start, where the arm
        is at rest. The acceleration of step t is the constant acceleration
        that carries (r[t], velocity[t]) onto waypoint t within the period.

        Returns:
            (r, velocity, acceleration), each of shape (H, 2), in m, m/s, m/s².
        """
        points = np.vstack([self.start[None, :], self.waypoints])
        t = np.concatenate([[0.0], self.times])
        velocity = np.zeros((self.horizon, points.shape[1]))
        velocity[1:] = (points[2:] - points[:-2]) / (t[2:] - t[:-2])[:, None]
        period = np.diff(t)[:, None]
        acceleration = 2.0 * (points[1:] - points[:-1] - period * velocity) / period**2
        return points[:-1], velocity, acceleration


def _times(horizon: int, control_dt: float) -> np.ndarray:
    return control_dt * np.arange(1, horizon + 1, dtype=np.float64)


def _polar(radius: float, angle: float) -> np.ndarray:
    return radius * np.array([math.cos(angle), math.sin(angle)])


def _segment_clearance(a: np.ndarray, b: np.ndarray) -> float:
    """Distance from the origin to segment ab."""
    d = b - a
    denom = float(d @ d)
    s = 0.0 if denom == 0.0 else float(np.clip(-(a @ d) / denom, 0.0, 1.0))
    return float(np.linalg.norm(a + s * d))


def line_trajectory(
    start: np.ndarray, end: np.ndarray, horizon: int, control_dt: float
) -> TrajectorySpec:
    """Constant-speed segment; equal endpoints give a stationary hold."""
    fractions = np.arange(1, horizon + 1, dtype=np.float64) / horizon
    waypoints = start[None, :] + fractions[:, None] * (end - start)[None, :]
    return TrajectorySpec("line", start.copy(), waypoints, _times(horizon, control_dt))


def circle_trajectory(
    center: np.ndarray,
    radius: float,
    phase: float,
    direction: int,
    horizon: int,
    control_dt: float,
) -> TrajectorySpec:
    """One full revolution spread over the horizon."""
    angles = phase + direction * 2.0 * math.pi * np.arange(1, horizon + 1) / horizon
    waypoints = center[None, :] + radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    start = center + _polar(radius, phase)
    return TrajectorySpec("circle", start, waypoints, _times(horizon, control_dt))


def lissajous_trajectory(
    center: np.ndarray,
    amplitude: tuple[float, float],
    horizon: int,
    control_dt: float,
) -> TrajectorySpec:
    """x:y frequency ratio 2:3, one period over the horizon."""
    s = 2.0 * math.pi * np.arange(0, horizon + 1) / horizon
    points = center[None, :] + np.stack(
        [amplitude[0] * np.sin(2.0 * s + math.pi / 2), amplitude[1] * np.sin(3.0 * s)], axis=1
    )
    return TrajectorySpec("lissajous", points[0], points[1:], _times(horizon, control_dt))


def sample_trajectory(
    kind: str,
    rng: np.random.Generator,
    arm: ArmModel,
    horizon: int,
    control_dt: float,
) -> TrajectorySpec:
    """Random trajectory of ``kind`` inside the arm's reachable annulus."""
    inner, outer = reachable_annulus(arm)
    if kind == "line":
        for _ in range(_MAX_LINE_TRIES):
            a = _polar(rng.uniform(inner, outer), rng.uniform(-math.pi, math.pi))
            b = _polar(rng.uniform(inner, outer), rng.uniform(-math.pi, math.pi))
            if _segment_clearance(a, b) >= inner:
                return line_trajectory(a, b, horizon, control_dt)
        # Radial segments always clear the inner radius.
        radial = a * (np.linalg.norm(b) / np.linalg.norm(a))
        return line_trajectory(a, radial, horizon, control_dt)
    if kind == "circle":
        radius = rng.uniform(*CIRCLE_RADIUS)
        if outer - inner < 2 * radius:
            raise ConfigError(f"arm workspace too small for a circle of radius {radius:.3f} m")
        center = _polar(rng.uniform(inner + radius, outer - radius), rng.uniform(-math.pi, math.pi))
        direction = 1 if rng.uniform() < 0.5 else -1
        return circle_trajectory(
            center, radius, rng.uniform(-math.pi, math.pi), direction, horizon, control_dt
        )
    if kind == "lissajous":
        amplitude = (rng.uniform(*LISSAJOUS_AMPLITUDE), rng.uniform(*LISSAJOUS_AMPLITUDE))
        extent = math.hypot(*amplitude)
        if outer - inner < 2 * extent:
            raise ConfigError("arm workspace too small for a lissajous path")
        center = _polar(rng.uniform(inner + extent, outer - extent), rng.uniform(-math.pi, math.pi))
        return lissajous_trajectory(center, amplitude, horizon, control_dt)
    raise ValueError(f"kind must be one of {TRAJECTORY_KINDS}, got {kind!r}")
