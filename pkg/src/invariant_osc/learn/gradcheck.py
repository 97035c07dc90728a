"""Finite-difference audit of every analytical derivative the learner relies on.

Two families of checks run on randomly perturbed networks:

* forward-mode q-derivatives (``dH/dq`` of the base, residual and composed
  model, and ``g = dV/dq``) against central differences in q;
* reverse-mode loss gradients, sampled along random parameter directions,
  against central differences of the loss.

Errors are reported as ``|a - b| / max(|a|, |b|, 1)``.
"""

import logging
from collections.abc import Callable, Iterable
from dataclasses import dataclass
from typing import Any

import numpy as np

from invariant_osc.autodiff import Tensor, no_grad
from invariant_osc.learn.losses import Batch, LossWeights, dynamics_loss, loss_and_gradients
from invariant_osc.models.composed import ComposedModel, build_model

logger = logging.getLogger(__name__)

DERIVATIVE_TOL = 1e-5
LOSS_TOL = 1e-4
FD_STEP = 1e-5

# (value, q-derivative with the joint index last)
DerivativePair = tuple[Tensor, Tensor]


@dataclass(frozen=True)
class GradCheckResult:
    name: str
    max_rel_error: float
    tolerance: float
    samples: int

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.max_rel_error) and self.max_rel_error <= self.tolerance)

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "max_rel_error": self.max_rel_error,
            "tolerance": self.tolerance,
            "samples": self.samples,
            "passed": self.passed,
        }


def suite_passed(results: Iterable[GradCheckResult]) -> bool:
    return all(r.passed for r in results)


def _rel(a: np.ndarray | float, b: np.ndarray | float) -> float:
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    scale = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1.0)
    return float(np.max(np.abs(a - b) / scale))


def _perturb(model: ComposedModel, rng: np.random.Generator, scale: float = 0.02) -> None:
    """Move every parameter off its initial value so zero heads are exercised."""
    for name in sorted(model.parameters()):
        p = model.parameters()[name]
        p.value = p.value + scale * rng.standard_normal(p.value.shape)


def random_batch(
    rng: np.random.Generator, size: int, n_dof: int, history_steps: int
) -> Batch:
    return Batch(
        q=rng.uniform(-np.pi, np.pi, (size, n_dof)),
        qd=rng.normal(0.0, 1.0, (size, n_dof)),
        qdd=rng.normal(0.0, 5.0, (size, n_dof)),
        tau=rng.normal(0.0, 5.0, (size, n_dof)),
        history=rng.normal(0.0, 1.0, (size, history_steps, 3 * n_dof)),
    )


def derivative_error(
    fn: Callable[[Tensor, Tensor], DerivativePair],
    q: np.ndarray,
    history: np.ndarray,
    step: float = FD_STEP,
) -> float:
    """Worst error of ``fn``'s analytical q-derivative over all rows and joints."""
    with no_grad():
        _, analytic = fn(Tensor(q), Tensor(history))
        worst = 0.0
        for k in range(q.shape[1]):
            dq = np.zeros_like(q)
            dq[:, k] = step
            plus, _ = fn(Tensor(q + dq), Tensor(history))
            minus, _ = fn(Tensor(q - dq), Tensor(history))
            numeric = (plus.value - minus.value) / (2.0 * step)
            worst = max(worst, _rel(analytic.value[..., k], numeric))
    return worst


def loss_direction_error(
    model: ComposedModel,
    batch: Batch,
    namespaces: tuple[str, ...],
    rng: np.random.Generator,
    samples: int,
    weights: LossWeights = LossWeights(),
    step: float = FD_STEP,
) -> float:
    """Directional derivative of the loss along random directions in ``namespaces``."""
    params = model.parameters()
    names = [n for n in sorted(params) if n.split("/", 1)[0] in namespaces]
    _, grads = loss_and_gradients(model, batch, weights)
    original = {n: params[n].value.copy() for n in names}
    worst = 0.0
    try:
        for _ in range(samples):
            direction = {n: rng.standard_normal(original[n].shape) for n in names}
            norm = np.sqrt(sum(float(np.sum(d * d)) for d in direction.values()))
            direction = {n: d / norm for n, d in direction.items()}
            analytic = sum(float(np.sum(grads[n] * direction[n])) for n in names)
            values = []
            for sign in (1.0, -1.0):
                for n in names:
                    params[n].value = original[n] + sign * step * direction[n]
                with no_grad():
                    loss, _ = dynamics_loss(model, batch, weights)
                values.append(float(loss.value))
            numeric = (values[0] - values[1]) / (2.0 * step)
            worst = max(worst, _rel(analytic, numeric))
    finally:
        for n in names:
            params[n].value = original[n]
    return worst


def gradient_suite(
    n_dof: int,
    history_steps: int,
    *,
    samples: int = 100,
    seed: int = 0,
    network_options: dict[str, Any] | None = None,
    batch_size: int = 16,
) -> list[GradCheckResult]:
    """Run every derivative and gradient check on models of the given sizes."""
    options = dict(network_options or {})
    rng = np.random.default_rng(seed)
    results = []

    base_model = build_model("no_residual_no_pretrain", n_dof, history_steps, seed=seed, **options)
    full = build_model("oscar", n_dof, history_steps, seed=seed, **options)

    # Zero residual heads must leave the base output untouched.
    points = random_batch(rng, batch_size, n_dof, history_steps)
    with no_grad():
        composed = full.forward(Tensor(points.q), Tensor(points.history))
        alone = full.base.forward(Tensor(points.q))
    identity_error = max(
        float(np.max(np.abs(composed.H.value - alone.H.value))),
        float(np.max(np.abs(composed.g.value - alone.g.value))),
    )
    results.append(GradCheckResult("identity_residual", identity_error, 0.0, batch_size))

    _perturb(base_model, rng)
    _perturb(full, rng)
    q = rng.uniform(-np.pi, np.pi, (samples, n_dof))
    history = rng.normal(0.0, 1.0, (samples, history_steps, 3 * n_dof))

    def base_mass(q: Tensor, h: Tensor) -> DerivativePair:
        out = base_model.base.forward(q)
        return out.H, out.dH

    def base_potential(q: Tensor, h: Tensor) -> DerivativePair:
        out = base_model.base.forward(q)
        return out.V, out.g

    def residual_factor(q: Tensor, h: Tensor) -> DerivativePair:
        res = full.residual.forward(q, full.base.forward(q), full.encoder.encode(h))
        return res.M, res.dM

    def composed_mass(q: Tensor, h: Tensor) -> DerivativePair:
        out = full.forward(q, h)
        return out.H, out.dH

    def composed_potential(q: Tensor, h: Tensor) -> DerivativePair:
        out = full.forward(q, h)
        return out.V, out.g

    for name, fn in (
        ("base_dH", base_mass),
        ("base_g", base_potential),
        ("residual_dH", residual_factor),
        ("composed_dH", composed_mass),
        ("composed_g", composed_potential),
    ):
        results.append(
            GradCheckResult(name, derivative_error(fn, q, history), DERIVATIVE_TOL, samples)
        )

    batch = random_batch(rng, batch_size, n_dof, history_steps)
    for name, model, namespaces in (
        ("loss_base", base_model, ("base",)),
        ("loss_residual", full, ("residual",)),
        ("loss_encoder", full, ("encoder",)),
        ("loss_full", full, ("base", "residual", "encoder")),
    ):
        error = loss_direction_error(model, batch, namespaces, rng, samples)
        results.append(GradCheckResult(name, error, LOSS_TOL, samples))

    for r in results:
        log = logger.info if r.passed else logger.warning
        log("gradcheck %s: max rel error %.3e (tol %.0e)", r.name, r.max_rel_error, r.tolerance)
    return results
