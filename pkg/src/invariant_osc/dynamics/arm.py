"""Planar N-link arm description and joint-state records."""

import json
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Any

import numpy as np

from invariant_osc.errors import ConfigError

TASK_DIM = 2

_LINK_KEYS = (
    "length",
    "com_offset",
    "mass",
    "rot_inertia",
    "viscous_damping",
    "coulomb_friction",
    "armature",
)


@dataclass(frozen=True)
class LinkParams:
    """One revolute link. Units: m, kg, kg·m², N·m·s/rad, N·m."""

    length: float
    com_offset: float
    mass: float
    rot_inertia: float = 0.0
    viscous_damping: float = 0.0
    coulomb_friction: float = 0.0
    armature: float = 0.0

    def __post_init__(self) -> None:
        for name in _LINK_KEYS:
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ConfigError(f"link {name} must be a finite number, got {value!r}")
            if value < 0:
                raise ConfigError(f"link {name} must be non-negative, got {value!r}")
        if self.com_offset > self.length:
            raise ConfigError(
                f"com_offset must lie in [0, length], got {self.com_offset} > {self.length}"
            )


@dataclass(frozen=True)
class Payload:
    """Point mass rigidly attached at ``offset`` beyond the last link tip."""

    mass: float = 0.0
    offset: float = 0.0

    def __post_init__(self) -> None:
        if self.mass < 0 or self.offset < 0:
            raise ConfigError(f"payload mass and offset must be non-negative, got {self}")


@dataclass(frozen=True)
class LinkArrays:
    """Per-link arrays with the payload folded into the last link."""

    lengths: np.ndarray
    com_offsets: np.ndarray
    masses: np.ndarray
    inertias: np.ndarray
    armature: np.ndarray
    viscous: np.ndarray
    coulomb: np.ndarray


@dataclass(frozen=True)
class ArmModel:
    """Ground-truth kinematic and dynamic parameters of a planar arm."""

    links: tuple[LinkParams, ...]
    gravity: tuple[float, float] = (0.0, -9.81)
    payload: Payload = field(default_factory=Payload)

    def __post_init__(self) -> None:
        if len(self.links) < 1:
            raise ConfigError("arm needs at least one link")
        if len(self.gravity) != 2:
            raise ConfigError(f"gravity must be a 2-vector, got {self.gravity!r}")

    @property
    def dof(self) -> int:
        return len(self.links)

    @property
    def reach(self) -> float:
        return float(sum(link.length for link in self.links))

    @cached_property
    def arrays(self) -> LinkArrays:
        lengths = np.array([link.length for link in self.links], dtype=np.float64)
        com = np.array([link.com_offset for link in self.links], dtype=np.float64)
        masses = np.array([link.mass for link in self.links], dtype=np.float64)
        inertias = np.array([link.rot_inertia for link in self.links], dtype=np.float64)

        # Fold the payload into the last link (parallel-axis theorem).
        mp = self.payload.mass
        if mp > 0:
            m_last = masses[-1]
            r_payload = lengths[-1] + self.payload.offset
            m_total = m_last + mp
            c_total = (m_last * com[-1] + mp * r_payload) / m_total
            inertias[-1] = (
                inertias[-1]
                + m_last * (com[-1] - c_total) ** 2
                + mp * (r_payload - c_total) ** 2
            )
            masses[-1] = m_total
            com[-1] = c_total

        return LinkArrays(
            lengths=lengths,
            com_offsets=com,
            masses=masses,
            inertias=inertias,
            armature=np.array([link.armature for link in self.links], dtype=np.float64),
            viscous=np.array([link.viscous_damping for link in self.links], dtype=np.float64),
            coulomb=np.array([link.coulomb_friction for link in self.links], dtype=np.float64),
        )

    @property
    def gravity_vector(self) -> np.ndarray:
        return np.asarray(self.gravity, dtype=np.float64)

    def with_payload(self, mass: float, offset: float | None = None) -> "ArmModel":
        """Copy carrying a point payload.

        Args:
            mass: Payload mass (kg).
            offset: Distance past the last-link tip (m); keeps the current one if None.

        Returns:
            New ArmModel; the payload is folded into the last link by ``arrays``.
        """
        off = self.payload.offset if offset is None else offset
        return replace(self, payload=Payload(mass=mass, offset=off))

    def with_joint_params(
        self,
        viscous_damping: np.ndarray | None = None,
        coulomb_friction: np.ndarray | None = None,
        armature: np.ndarray | None = None,
    ) -> "ArmModel":
        """Copy with per-joint friction, damping and armature replaced.

        Args:
            viscous_damping: Per-joint viscous coefficients (N·m·s/rad), or None to keep.
            coulomb_friction: Per-joint Coulomb levels (N·m), or None to keep.
            armature: Per-joint rotor inertia (kg·m²), or None to keep.

        Returns:
            New ArmModel with the same geometry and payload.
        """
        links = []
        for i, link in enumerate(self.links):
            updates: dict[str, float] = {}
            if viscous_damping is not None:
                updates["viscous_damping"] = float(viscous_damping[i])
            if coulomb_friction is not None:
                updates["coulomb_friction"] = float(coulomb_friction[i])
            if armature is not None:
                updates["armature"] = float(armature[i])
            links.append(replace(link, **updates))
        return replace(self, links=tuple(links))

    def to_dict(self) -> dict[str, Any]:
        return {
            "links": [{key: getattr(link, key) for key in _LINK_KEYS} for link in self.links],
            "gravity": list(self.gravity),
            "payload": {"mass": self.payload.mass, "offset": self.payload.offset},
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any], path: str = "arm") -> "ArmModel":
        _reject_unknown(doc, {"links", "gravity", "payload"}, path)
        if "links" not in doc:
            raise ConfigError(f"{path}.links is required")
        links = []
        for i, link_doc in enumerate(doc["links"]):
            _reject_unknown(link_doc, set(_LINK_KEYS), f"{path}.links[{i}]")
            links.append(LinkParams(**{k: float(v) for k, v in link_doc.items()}))
        payload_doc = doc.get("payload", {})
        _reject_unknown(payload_doc, {"mass", "offset"}, f"{path}.payload")
        gravity = doc.get("gravity", [0.0, -9.81])
        return cls(
            links=tuple(links),
            gravity=(float(gravity[0]), float(gravity[1])),
            payload=Payload(**{k: float(v) for k, v in payload_doc.items()}),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ArmModel":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class JointState:
    """One control-rate record of (q, qd, qdd, tau, t)."""

    q: np.ndarray
    qd: np.ndarray
    qdd: np.ndarray
    tau: np.ndarray
    t: float

    def __post_init__(self) -> None:
        n = len(self.q)
        for name in ("qd", "qdd", "tau"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"JointState.{name} must have length {n}")

    def is_finite(self) -> bool:
        return bool(
            np.all(np.isfinite(self.q))
            and np.all(np.isfinite(self.qd))
            and np.all(np.isfinite(self.qdd))
            and np.all(np.isfinite(self.tau))
            and math.isfinite(self.t)
        )


def default_arm(n_links: int = 3) -> ArmModel:
    """Desk-scale arm: 0.70 m reach for three links, uniform rods with armature."""
    if n_links == 3:
        lengths = (0.30, 0.25, 0.15)
        masses = (1.5, 1.0, 0.5)
    else:
        lengths = tuple(0.7 / n_links for _ in range(n_links))
        masses = tuple(1.0 for _ in range(n_links))
    links = tuple(
        LinkParams(
            length=length,
            com_offset=length / 2,
            mass=mass,
            rot_inertia=mass * length**2 / 12,
            viscous_damping=0.05,
            coulomb_friction=0.0,
            armature=5e-3,
        )
        for length, mass in zip(lengths, masses)
    )
    return ArmModel(links=links, payload=Payload(mass=0.0, offset=0.05))


def _reject_unknown(doc: Any, allowed: set[str], path: str) -> None:
    """Raise ConfigError unless ``doc`` is a dict whose keys all lie in ``allowed``.

    Args:
        doc: Parsed JSON section.
        allowed: Accepted keys.
        path: Dotted section name used in the message.
    """
    if not isinstance(doc, dict):
        raise ConfigError(f"{path} must be an object, got {type(doc).__name__}")
    for key in doc:
        if key not in allowed:
            raise ConfigError(f"unknown config key '{path}.{key}'")
