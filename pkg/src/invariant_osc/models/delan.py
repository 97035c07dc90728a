"""Lagrangian base network: q -> (H, dH/dq, V, g) and the equations of motion.

The mass matrix is assembled as ``H = L + L^T + diag(l_d)`` with L strictly
lower triangular and ``l_d = softplus(.) + eps_d``. Derivatives with respect
to q are propagated forward through every layer, so ``dH/dq`` and
``g = dV/dq`` are exact and remain differentiable by the reverse pass.
"""

import logging
import math
import threading
from dataclasses import dataclass

import numpy as np

from invariant_osc import autodiff as ad
from invariant_osc.autodiff import Tensor
from invariant_osc.models.layers import Linear, Module, Stack

logger = logging.getLogger(__name__)

DIAGONAL_EPS = 1e-3
PD_FLOOR = 1e-4


@dataclass
class DelanOutput:
    """Batched model outputs. dH carries the joint index k on the last axis."""

    H: Tensor  # (B, N, N)
    dH: Tensor  # (B, N, N, N)
    V: Tensor  # (B,)
    g: Tensor  # (B, N)


def lower_selector(n: int) -> np.ndarray:
    """(N(N-1)/2, N, N) one-hot map from a flat vector to strictly-lower entries."""
    rows, cols = np.tril_indices(n, k=-1)
    out = np.zeros((len(rows), n, n))
    out[np.arange(len(rows)), rows, cols] = 1.0
    return out


def diagonal_selector(n: int) -> np.ndarray:
    out = np.zeros((n, n, n))
    out[np.arange(n), np.arange(n), np.arange(n)] = 1.0
    return out


def upper_selector(n: int) -> np.ndarray:
    """(N(N+1)/2, N, N) one-hot map picking the upper triangle incl. diagonal."""
    rows, cols = np.triu_indices(n)
    out = np.zeros((len(rows), n, n))
    out[np.arange(len(rows)), rows, cols] = 1.0
    return out


def assemble_symmetric(
    lower: Tensor,
    d_lower: Tensor,
    diag: Tensor,
    d_diag: Tensor,
    n: int,
) -> tuple[Tensor, Tensor]:
    """Return ``L + L^T + diag`` and its q-derivative from flat head outputs."""
    sel_l, sel_d = lower_selector(n), diagonal_selector(n)
    L = ad.einsum("bm,mij->bij", lower, sel_l)
    dL = ad.einsum("bmk,mij->bijk", d_lower, sel_l)
    M = L + ad.swap_last(L) + ad.einsum("bn,nij->bij", diag, sel_d)
    dM = dL + ad.transpose(dL, (0, 2, 1, 3)) + ad.einsum("bnk,nij->bijk", d_diag, sel_d)
    return M, dM


def inv_softplus(y: float) -> float:
    return y + math.log(-math.expm1(-y))


class DelanBase(Module):
    """Shared softplus core with L, L_d and V heads."""

    def __init__(
        self,
        n_dof: int,
        rng: np.random.Generator,
        *,
        width: int = 128,
        depth: int = 4,
        init_scale: float = 0.01,
        diagonal_eps: float = DIAGONAL_EPS,
    ) -> None:
        super().__init__("base")
        self.n_dof = n_dof
        self.diagonal_eps = diagonal_eps
        self.core = Stack("base/core", n_dof, width, depth, rng)
        size = self.core.out_features
        n_lower = n_dof * (n_dof - 1) // 2
        self.lower_head = Linear(
            "base/lower", size, n_lower, rng, activation="linear", scale=init_scale
        )
        # Bias chosen so softplus(bias) + eps_d = 1, giving H = I at zero weights.
        self.diag_head = Linear(
            "base/diag",
            size,
            n_dof,
            rng,
            activation="linear",
            scale=init_scale,
            bias=inv_softplus(1.0 - diagonal_eps),
        )
        self.potential_head = Linear(
            "base/potential", size, 1, rng, activation="linear", scale=init_scale
        )
        for part in (self.core, self.lower_head, self.diag_head, self.potential_head):
            self._params.update(part.parameters())

    def forward(self, q: Tensor) -> DelanOutput:
        batch, n = q.shape
        seed = Tensor(np.broadcast_to(np.eye(n), (batch, n, n)))
        h, dh = self.core(q, seed)
        lower, d_lower = self.lower_head(h, dh)
        pre, d_pre = self.diag_head(h, dh)
        diag = ad.softplus(pre) + self.diagonal_eps
        d_diag = ad.reshape(ad.sigmoid(pre), pre.shape + (1,)) * d_pre
        H, dH = assemble_symmetric(lower, d_lower, diag, d_diag, n)
        V, dV = self.potential_head(h, dh)
        return DelanOutput(
            H=H, dH=dH, V=ad.reshape(V, (batch,)), g=ad.reshape(dV, (batch, n))
        )


def coriolis_gravity(out: DelanOutput, qd: Tensor) -> Tensor:
    """tau_cg = Hdot qd - 1/2 d/dq (qd^T H qd) + g."""
    hdot_qd = ad.einsum("bijk,bk,bj->bi", out.dH, qd, qd)
    quadratic = ad.einsum("bi,bijk,bj->bk", qd, out.dH, qd)
    return hdot_qd - 0.5 * quadratic + out.g


def predict_tau(out: DelanOutput, qd: Tensor, qdd: Tensor) -> Tensor:
    """Inverse dynamics H qdd + tau_cg."""
    return coriolis_gravity(out, qd) + ad.einsum("bij,bj->bi", out.H, qdd)


def predict_qdd(
    out: DelanOutput, qd: Tensor, tau: Tensor, guard: "PdGuard | None" = None
) -> Tensor:
    """Forward dynamics H^-1 (tau - tau_cg), with the PD guard applied to H."""
    H = out.H if guard is None else guard.apply_tensor(out.H)
    return ad.solve(H, tau - coriolis_gravity(out, qd))


def power_residual(out: DelanOutput, qd: Tensor, qdd: Tensor, tau: Tensor) -> Tensor:
    """qd^T H qdd + 1/2 qd^T Hdot qd + qd^T g - qd^T tau, per row."""
    work = ad.einsum("bi,bij,bj->b", qd, out.H, qdd)
    kinetic_rate = ad.einsum("bi,bijk,bk,bj->b", qd, out.dH, qd, qd)
    potential_rate = ad.einsum("bi,bi->b", qd, out.g)
    applied = ad.einsum("bi,bi->b", qd, tau)
    return work + 0.5 * kinetic_rate + potential_rate - applied


class PdGuard:
    """Eigenvalue floor applied before inverting a learned mass matrix.

    Counters are shared by every thread holding the guard.
    """

    def __init__(self, floor: float = PD_FLOOR) -> None:
        self.floor = floor
        self.activations = 0
        self.evaluations = 0
        self._lock = threading.Lock()

    @property
    def rate(self) -> float:
        return self.activations / self.evaluations if self.evaluations else 0.0

    def reset_counters(self) -> None:
        with self._lock:
            self.activations = 0
            self.evaluations = 0

    def _shift(self, H: np.ndarray) -> np.ndarray:
        eigmin = np.linalg.eigvalsh(H)[..., 0]
        shift = np.where(eigmin < self.floor, self.floor - eigmin, 0.0)
        active = int(np.count_nonzero(shift))
        with self._lock:
            self.evaluations += int(np.size(eigmin))
            self.activations += active
        if active:
            logger.debug("pd guard raised %d of %d mass matrices", active, np.size(eigmin))
        return shift

    def apply(self, H: np.ndarray) -> np.ndarray:
        shift = self._shift(H)
        return H + shift[..., None, None] * np.eye(H.shape[-1])

    def apply_tensor(self, H: Tensor) -> Tensor:
        """Same floor on a batched Tensor; the shift is a constant."""
        shift = self._shift(H.value)
        if not np.any(shift):
            return H
        return H + Tensor(shift[:, None, None] * np.eye(H.shape[-1]))
