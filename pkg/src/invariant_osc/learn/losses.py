"""Inverse, forward and power-balance losses and their parameter gradients."""

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from invariant_osc import autodiff as ad
from invariant_osc.autodiff import Tensor
from invariant_osc.errors import ConfigError, NonFiniteGradientError, NonFiniteLossError
from invariant_osc.models.composed import DynamicsModel
from invariant_osc.models.delan import PdGuard, power_residual, predict_qdd, predict_tau
from invariant_osc.sim.rollout import Transition

TERMS = ("inverse", "forward", "energy")


@dataclass(frozen=True)
class LossWeights:
    w_inv: float = 1.0
    w_fwd: float = 0.1
    w_energy: float = 0.1

    def __post_init__(self) -> None:
        weights = (self.w_inv, self.w_fwd, self.w_energy)
        if any(w < 0 for w in weights) or not any(w > 0 for w in weights):
            raise ConfigError(f"loss weights must be >= 0 and not all zero, got {weights}")


@dataclass(frozen=True)
class Batch:
    """B stacked transitions; history is (B, K, 3N)."""

    q: np.ndarray
    qd: np.ndarray
    qdd: np.ndarray
    tau: np.ndarray
    history: np.ndarray

    def __post_init__(self) -> None:
        if len(self.q) < 1:
            raise ValueError("batch must contain at least one row")

    def __len__(self) -> int:
        return len(self.q)

    @classmethod
    def from_transitions(cls, transitions: Sequence[Transition]) -> "Batch":
        return cls(
            q=np.array([t.state.q for t in transitions]),
            qd=np.array([t.state.qd for t in transitions]),
            qdd=np.array([t.state.qdd for t in transitions]),
            tau=np.array([t.state.tau for t in transitions]),
            history=np.array([t.history for t in transitions]),
        )

    def row(self, i: int) -> dict[str, list[float]]:
        return {
            "q": self.q[i].tolist(),
            "qd": self.qd[i].tolist(),
            "qdd": self.qdd[i].tolist(),
            "tau": self.tau[i].tolist(),
        }


def dynamics_loss(
    model: DynamicsModel,
    batch: Batch,
    weights: LossWeights = LossWeights(),
    guard: PdGuard | None = None,
) -> tuple[Tensor, dict[str, float]]:
    """Weighted sum of the batch-mean squared inverse, forward and power residuals.

    Raises NonFiniteLossError naming the first row whose terms are not finite.
    """
    qd, qdd, tau = Tensor(batch.qd), Tensor(batch.qdd), Tensor(batch.tau)
    out = model.forward(Tensor(batch.q), Tensor(batch.history))

    inv_err = predict_tau(out, qd, qdd) - tau
    fwd_err = predict_qdd(out, qd, tau, guard) - qdd
    rows = {
        "inverse": ad.einsum("bi,bi->b", inv_err, inv_err),
        "forward": ad.einsum("bi,bi->b", fwd_err, fwd_err),
        "energy": ad.square(power_residual(out, qd, qdd, tau)),
    }

    finite = np.all([np.isfinite(r.value) for r in rows.values()], axis=0)
    if not np.all(finite):
        bad = int(np.argmin(finite))
        values = batch.row(bad)
        residuals = ", ".join(f"{name}={float(r.value[bad])!r}" for name, r in rows.items())
        dump = " ".join(f"{key}={value}" for key, value in values.items())
        raise NonFiniteLossError(
            f"dynamics loss is not finite at batch row {bad} ({residuals}): {dump}",
            row=bad,
            values=values,
        )

    terms = {name: ad.mean(r) for name, r in rows.items()}
    total = (
        weights.w_inv * terms["inverse"]
        + weights.w_fwd * terms["forward"]
        + weights.w_energy * terms["energy"]
    )
    breakdown = {name: float(t.value) for name, t in terms.items()}
    breakdown["total"] = float(total.value)
    return total, breakdown


def loss_and_gradients(
    model: DynamicsModel,
    batch: Batch,
    weights: LossWeights = LossWeights(),
    guard: PdGuard | None = None,
) -> tuple[dict[str, float], dict[str, np.ndarray]]:
    """Reverse pass through the loss; frozen parameters get no gradient slot."""
    params = model.trainable_parameters()
    for p in params.values():
        p.zero_grad()
    loss, breakdown = dynamics_loss(model, batch, weights, guard)
    if loss.requires_grad:
        loss.backward()
    grads = {}
    for name, p in params.items():
        grad = np.zeros_like(p.value) if p.grad is None else p.grad
        if not np.all(np.isfinite(grad)):
            raise NonFiniteGradientError(f"gradient of '{name}' is not finite", parameter=name)
        grads[name] = grad
    return breakdown, grads
