"""Base + residual + encoder composition and the ablation variants."""

import copy
from typing import Protocol, runtime_checkable

import numpy as np

from invariant_osc.autodiff import Tensor
from invariant_osc.errors import CheckpointError, ConfigError
from invariant_osc.models.delan import DelanBase, DelanOutput
from invariant_osc.models.residual import ExtrinsicsEncoder, ResidualNet, compose

NAMESPACES = ("base", "residual", "encoder")

VARIANTS = (
    "oscar",
    "additive_residual",
    "no_extrinsics",
    "no_residual_finetune_base",
    "no_residual_freeze_base",
    "no_residual_no_pretrain",
)


@runtime_checkable
class DynamicsModel(Protocol):
    def forward(self, q: Tensor, history: Tensor | None = None) -> DelanOutput: ...


class ComposedModel:
    """H = H_base (*) H~ with z from the encoder; residual and encoder optional."""

    def __init__(
        self,
        base: DelanBase,
        residual: ResidualNet | None = None,
        encoder: ExtrinsicsEncoder | None = None,
    ) -> None:
        self.base = base
        self.residual = residual
        self.encoder = encoder
        self.frozen: set[str] = set()

    @property
    def n_dof(self) -> int:
        return self.base.n_dof

    def forward(self, q: Tensor, history: Tensor | None = None) -> DelanOutput:
        out = self.base.forward(q)
        if self.residual is None:
            return out
        if self.encoder is not None:
            if history is None:
                raise ValueError("history is required when the model has an encoder")
            z = self.encoder.encode(history)
        else:
            z = Tensor(np.zeros((q.shape[0], self.residual.latent_dim)))
        return compose(out, self.residual.forward(q, out, z))

    # Parameters

    def parameters(self) -> dict[str, Tensor]:
        params = dict(self.base.parameters())
        for part in (self.residual, self.encoder):
            if part is not None:
                params.update(part.parameters())
        return params

    def trainable_parameters(self) -> dict[str, Tensor]:
        return {
            name: p
            for name, p in self.parameters().items()
            if name.split("/", 1)[0] not in self.frozen
        }

    def freeze(self, namespace: str) -> None:
        if namespace not in NAMESPACES:
            raise ValueError(f"namespace must be one of {NAMESPACES}, got {namespace!r}")
        self.frozen.add(namespace)
        self._sync_requires_grad()

    def unfreeze(self, namespace: str) -> None:
        self.frozen.discard(namespace)
        self._sync_requires_grad()

    def _sync_requires_grad(self) -> None:
        for name, p in self.parameters().items():
            p.requires_grad = name.split("/", 1)[0] not in self.frozen
            p.grad = None

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: p.value.copy() for name, p in self.parameters().items()}

    def load_state_dict(
        self, state: dict[str, np.ndarray], namespaces: tuple[str, ...] | None = None
    ) -> list[str]:
        """Copy matching tensors in; returns the names loaded.

        Only names under ``namespaces`` (default: every namespace in ``state``
        that this model has) are considered; shape mismatches are rejected.
        """
        params = self.parameters()
        loaded = []
        for name, value in sorted(state.items()):
            namespace = name.split("/", 1)[0]
            if namespaces is not None and namespace not in namespaces:
                continue
            if name not in params:
                if any(n.startswith(namespace + "/") for n in params):
                    raise CheckpointError(
                        f"checkpoint tensor '{name}' has no counterpart in the model"
                    )
                continue
            target = params[name]
            if target.value.shape != np.shape(value):
                raise CheckpointError(
                    f"shape mismatch for '{name}': model {target.value.shape}, "
                    f"checkpoint {np.shape(value)}"
                )
            target.value = np.array(value, dtype=np.float64)
            loaded.append(name)
        return loaded

    def snapshot(self) -> "ComposedModel":
        """Deep copy for read-only use by rollout workers."""
        clone = copy.deepcopy(self)
        for p in clone.parameters().values():
            p.requires_grad = False
            p.grad = None
        return clone


def build_model(
    variant: str,
    n_dof: int,
    history_steps: int,
    *,
    seed: int = 0,
    base_width: int = 128,
    base_depth: int = 4,
    residual_width: int = 64,
    residual_depth: int = 3,
    encoder_width: int = 64,
    encoder_depth: int = 4,
    latent_dim: int = 8,
    init_scale: float = 0.01,
    residual_eps: float = 0.1,
    potential_residual: bool = True,
) -> ComposedModel:
    """Fresh model for an ablation variant; each component draws its own stream."""
    if variant not in VARIANTS:
        raise ConfigError(f"variant must be one of {VARIANTS}, got {variant!r}")
    base_rng, residual_rng, encoder_rng = (
        np.random.default_rng([seed, i]) for i in range(3)
    )
    base = DelanBase(n_dof, base_rng, width=base_width, depth=base_depth, init_scale=init_scale)
    if variant.startswith("no_residual"):
        return ComposedModel(base)
    residual = ResidualNet(
        n_dof,
        latent_dim,
        residual_rng,
        width=residual_width,
        depth=residual_depth,
        eps=residual_eps,
        mode="additive" if variant == "additive_residual" else "multiplicative",
        potential=potential_residual,
    )
    encoder = None
    if variant != "no_extrinsics":
        encoder = ExtrinsicsEncoder(
            n_dof,
            history_steps,
            encoder_rng,
            latent_dim=latent_dim,
            width=encoder_width,
            depth=encoder_depth,
        )
    return ComposedModel(base, residual, encoder)
