"""Experiment configuration: frozen dataclass sections loaded from JSON.

Every field has a default. Unknown keys are rejected at any depth with the
dotted path of the offending key. ``ExperimentConfig`` is an Invariant
artifact so it can be injected as graph context and hashed into manifests.
"""

import dataclasses
import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, BinaryIO

from invariant.protocol import ICacheable

from invariant_osc.dynamics.arm import ArmModel, _reject_unknown, default_arm
from invariant_osc.errors import ConfigError
from invariant_osc.models.composed import VARIANTS
from invariant_osc.sim.environment import RandomizationSpec, SimConfig
from invariant_osc.sim.trajectory import TRAJECTORY_KINDS

REGIMES = ("train", "zeroshot", "adapt")

# Seeds are unsigned 64-bit integers.
MAX_SEED = 2**64


def _check(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)


def _section_from_dict(cls: type, doc: Any, path: str) -> Any:
    _reject_unknown(doc, {f.name for f in dataclasses.fields(cls)}, path)
    values = {}
    for f in dataclasses.fields(cls):
        if f.name not in doc:
            continue
        value = doc[f.name]
        if isinstance(value, list):
            value = tuple(value)
        values[f.name] = value
    try:
        return cls(**values)
    except TypeError as exc:
        raise ConfigError(f"invalid value in '{path}': {exc}") from exc


@dataclass(frozen=True)
class ControllerConfig:
    """Gains and limits; kp in 1/s^2, torques in N·m.

    ``kp``/``damping_ratio`` serve any task-space controller the sweep has not
    tuned. ``fixed_kp``/``fixed_damping_ratio`` belong to the fixed-gain
    identity-mass baseline, which is never swept.
    """

    kp: float = 400.0
    damping_ratio: float = 0.75
    kv_sign: int = 1
    damping: float = 1e-2
    tau_max: float = 50.0
    joint_kp: float = 100.0
    joint_damping_ratio: float = 1.0
    check_inertia: bool = False
    fixed_kp: float = 100.0
    fixed_damping_ratio: float = 1.0
    sweep_kp_range: tuple[float, float] = (10.0, 400.0)
    sweep_kp_points: int = 6
    sweep_damping_ratios: tuple[float, ...] = (0.5, 0.75, 1.0, 2.0)
    sweep_episodes: int = 5

    def __post_init__(self) -> None:
        _check(self.kv_sign in (1, -1), f"controller.kv_sign must be 1 or -1, got {self.kv_sign}")
        _check(self.kp >= 0 and self.damping_ratio >= 0, "controller gains must be non-negative")
        _check(
            self.fixed_kp >= 0 and self.fixed_damping_ratio >= 0,
            "controller fixed gains must be non-negative",
        )
        _check(self.damping > 0, f"controller.damping must be positive, got {self.damping}")
        _check(self.tau_max > 0, f"controller.tau_max must be positive, got {self.tau_max}")
        low, high = self.sweep_kp_range
        _check(
            0 < low <= high,
            f"controller.sweep_kp_range must satisfy 0 < low <= high, got {(low, high)}",
        )
        _check(self.sweep_kp_points >= 1, "controller.sweep_kp_points must be >= 1")
        _check(
            len(self.sweep_damping_ratios) >= 1, "controller.sweep_damping_ratios must not be empty"
        )
        _check(self.sweep_episodes >= 1, "controller.sweep_episodes must be >= 1")


@dataclass(frozen=True)
class NetworkConfig:
    base_width: int = 128
    base_depth: int = 4
    residual_width: int = 64
    residual_depth: int = 3
    encoder_width: int = 64
    encoder_depth: int = 4
    latent_dim: int = 8
    init_scale: float = 0.01
    residual_eps: float = 0.1
    potential_residual: bool = True
    pd_floor: float = 1e-4

    def __post_init__(self) -> None:
        widths = ("base_width", "residual_width", "encoder_width", "latent_dim", "encoder_depth")
        for name in widths:
            _check(getattr(self, name) >= 1, f"network.{name} must be >= 1")
        _check(
            self.residual_eps > 0, f"network.residual_eps must be positive, got {self.residual_eps}"
        )
        _check(self.pd_floor > 0, f"network.pd_floor must be positive, got {self.pd_floor}")

    def model_options(self) -> dict[str, Any]:
        """Keyword arguments for models.build_model."""
        options = asdict(self)
        options.pop("pd_floor")
        return options


@dataclass(frozen=True)
class TrainingConfig:
    learning_rate: float = 1e-3
    betas: tuple[float, float] = (0.9, 0.999)
    adam_eps: float = 1e-8
    w_inv: float = 1.0
    w_fwd: float = 0.1
    w_energy: float = 0.1
    batch_size: int = 256
    steps_per_round: int = 50
    replay_episodes: int = 200
    pretrain_rounds: int = 50
    finetune_rounds: int = 30
    episodes_per_round: int = 10
    workers: int = 16
    adapt_workers: int = 4
    divergence_threshold: float = 1e6
    checkpoint_every: int = 0

    def __post_init__(self) -> None:
        weights = (self.w_inv, self.w_fwd, self.w_energy)
        _check(all(w >= 0 for w in weights), f"training loss weights must be >= 0, got {weights}")
        _check(any(w > 0 for w in weights), "training loss weights must not all be zero")
        _check(self.learning_rate > 0, "training.learning_rate must be positive")
        counts = ("batch_size", "replay_episodes", "episodes_per_round", "workers", "adapt_workers")
        for name in counts:
            _check(getattr(self, name) >= 1, f"training.{name} must be >= 1")
        for name in ("steps_per_round", "pretrain_rounds", "finetune_rounds", "checkpoint_every"):
            _check(getattr(self, name) >= 0, f"training.{name} must be >= 0")


@dataclass(frozen=True)
class EvaluationConfig:
    episodes: int = 50
    seed_count: int = 3
    trajectory_kind: str = "circle"
    ood_payload_mass: float = 1.0
    adapt_payload_mass: float = 1.5
    adapt_trajectory_kind: str = "lissajous"
    pretrain_trajectory_kind: str = "line"
    log_episodes: bool = False

    def __post_init__(self) -> None:
        _check(self.episodes >= 1, "evaluation.episodes must be >= 1")
        _check(self.seed_count >= 1, "evaluation.seed_count must be >= 1")
        for name in ("trajectory_kind", "adapt_trajectory_kind", "pretrain_trajectory_kind"):
            value = getattr(self, name)
            _check(
                value in TRAJECTORY_KINDS,
                f"evaluation.{name} must be one of {TRAJECTORY_KINDS}, got {value!r}",
            )
        _check(
            self.ood_payload_mass >= 0 and self.adapt_payload_mass >= 0,
            "payload masses must be >= 0",
        )


@dataclass(frozen=True)
class RegimeSetup:
    """Randomisation, path kind and worker count for one evaluation regime."""

    regime: str
    randomization: RandomizationSpec
    trajectory_kind: str
    workers: int


@dataclass(frozen=True)
class ExperimentConfig(ICacheable):
    seed: int = 0
    out_dir: str = "runs"
    regime: str = "train"
    variant: str = "oscar"
    checkpoint: str | None = None
    arm: ArmModel = field(default_factory=default_arm)
    sim: SimConfig = field(default_factory=SimConfig)
    randomization: RandomizationSpec = field(default_factory=RandomizationSpec)
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    network: NetworkConfig = field(default_factory=NetworkConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)

    def __post_init__(self) -> None:
        _check(
            isinstance(self.seed, int)
            and not isinstance(self.seed, bool)
            and 0 <= self.seed < MAX_SEED,
            f"seed must be an integer in [0, 2**64), got {self.seed!r}",
        )
        _check(self.regime in REGIMES, f"regime must be one of {REGIMES}, got {self.regime!r}")
        _check(self.variant in VARIANTS, f"variant must be one of {VARIANTS}, got {self.variant!r}")
        _check(
            self.arm.dof >= 2, f"arm needs at least 2 links for planar tracking, got {self.arm.dof}"
        )

    @property
    def seeds(self) -> tuple[int, ...]:
        """Consecutive seeds from the base seed, wrapping at 2**64."""
        return tuple((self.seed + i) % MAX_SEED for i in range(self.evaluation.seed_count))

    def with_overrides(self, **sections: Any) -> "ExperimentConfig":
        return replace(self, **sections)

    def to_dict(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "out_dir": self.out_dir,
            "regime": self.regime,
            "variant": self.variant,
            "checkpoint": self.checkpoint,
            "arm": self.arm.to_dict(),
            "sim": self.sim.to_dict(),
            "randomization": self.randomization.to_dict(),
            "controller": asdict(self.controller),
            "network": asdict(self.network),
            "training": asdict(self.training),
            "evaluation": asdict(self.evaluation),
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "ExperimentConfig":
        sections = {
            "sim": SimConfig,
            "controller": ControllerConfig,
            "network": NetworkConfig,
            "training": TrainingConfig,
            "evaluation": EvaluationConfig,
        }
        _reject_unknown(doc, {f.name for f in dataclasses.fields(cls)}, "config")
        scalars = ("seed", "out_dir", "regime", "variant", "checkpoint")
        values: dict[str, Any] = {key: doc[key] for key in scalars if key in doc}
        if "arm" in doc:
            values["arm"] = ArmModel.from_dict(doc["arm"], "arm")
        if "randomization" in doc:
            values["randomization"] = RandomizationSpec.from_dict(doc["randomization"])
        for key, section in sections.items():
            if key in doc:
                values[key] = _section_from_dict(section, doc[key], key)
        return cls(**values)

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def stable_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()

    # ICacheable

    def get_stable_hash(self) -> str:
        return self.stable_hash()

    def to_stream(self, stream: BinaryIO) -> None:
        data = self.canonical_json().encode("utf-8")
        stream.write(len(data).to_bytes(8, byteorder="big"))
        stream.write(data)

    @classmethod
    def from_stream(cls, stream: BinaryIO) -> "ExperimentConfig":
        length = int.from_bytes(stream.read(8), byteorder="big")
        return cls.from_dict(json.loads(stream.read(length).decode("utf-8")))

    # Regimes

    def regime_setup(self, regime: str) -> RegimeSetup:
        """Train ranges as configured; zeroshot and adapt pin them at the maxima."""
        if regime == "train":
            return RegimeSetup(
                regime, self.randomization, self.evaluation.trajectory_kind, self.training.workers
            )
        if regime == "zeroshot":
            return RegimeSetup(
                regime,
                self.randomization.pinned_at_max(self.evaluation.ood_payload_mass),
                self.evaluation.trajectory_kind,
                self.training.workers,
            )
        if regime == "adapt":
            return RegimeSetup(
                regime,
                self.randomization.pinned_at_max(self.evaluation.adapt_payload_mass),
                self.evaluation.adapt_trajectory_kind,
                self.training.adapt_workers,
            )
        raise ConfigError(f"regime must be one of {REGIMES}, got {regime!r}")

    def pretrain_randomization(self) -> RandomizationSpec:
        return self.randomization.nominal()


def load_config(path: Path | str | None = None) -> ExperimentConfig:
    """Read a JSON config document; ``None`` gives the defaults."""
    if path is None:
        return ExperimentConfig()
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return ExperimentConfig.from_dict(doc)
