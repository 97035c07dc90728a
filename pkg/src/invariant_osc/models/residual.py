"""Task-specific pathway: history encoder and the bounded mass-matrix residual."""

import math
from dataclasses import dataclass

import numpy as np

from invariant_osc import autodiff as ad
from invariant_osc.autodiff import Tensor
from invariant_osc.models.delan import DelanOutput, assemble_symmetric, upper_selector
from invariant_osc.models.layers import Linear, Module, Stack

RESIDUAL_EPS = 0.1
RESIDUAL_MODES = ("multiplicative", "additive")

# Per-channel scale of (q, qd, tau) history features.
HISTORY_SCALES = (1.0, 0.2, 0.05)


class ExtrinsicsEncoder(Module):
    """Four-layer MLP from a K-step (q, qd, tau) window to a latent z."""

    def __init__(
        self,
        n_dof: int,
        history_steps: int,
        rng: np.random.Generator,
        *,
        latent_dim: int = 8,
        width: int = 64,
        depth: int = 4,
    ) -> None:
        super().__init__("encoder")
        if depth < 1:
            raise ValueError(f"encoder depth must be >= 1, got {depth}")
        self.n_dof = n_dof
        self.history_steps = history_steps
        self.latent_dim = latent_dim
        self.input_size = history_steps * 3 * n_dof
        self.hidden = Stack("encoder/hidden", self.input_size, width, depth - 1, rng)
        self.head = Linear(
            "encoder/out", self.hidden.out_features, latent_dim, rng, activation="linear"
        )
        self._params.update(self.hidden.parameters())
        self._params.update(self.head.parameters())
        self._scales = np.repeat(np.asarray(HISTORY_SCALES), n_dof)

    def encode(self, history: Tensor) -> Tensor:
        """history (B, K, 3N) -> z (B, d). Rows are steps t-K .. t-1."""
        if history.value.ndim != 3 or history.shape[1:] != (self.history_steps, 3 * self.n_dof):
            raise ValueError(
                f"history must have shape (B, {self.history_steps}, {3 * self.n_dof}), "
                f"got {history.shape}"
            )
        scaled = history * self._scales
        flat = ad.reshape(scaled, (history.shape[0], self.input_size))
        h, _ = self.hidden(flat)
        z, _ = self.head(h)
        return z


@dataclass
class ResidualOutput:
    """Residual factor (or additive term) with its q-derivative and potential."""

    mode: str
    M: Tensor  # (B, N, N): H~ for multiplicative, H_add for additive
    dM: Tensor  # (B, N, N, N)
    V: Tensor | None  # (B,)
    g: Tensor | None  # (B, N)


class ResidualNet(Module):
    """Softplus stack over (q, upper(H_base), z) with zero-initialised heads.

    Multiplicative mode bounds every entry of ``H~ = exp(ln(1+eps) tanh(P))``
    to ``[1/(1+eps), 1+eps]``. Additive mode returns ``s tanh(P)`` with
    ``s = eps * median|H_base|`` per sample held constant.
    """

    def __init__(
        self,
        n_dof: int,
        latent_dim: int,
        rng: np.random.Generator,
        *,
        width: int = 64,
        depth: int = 3,
        eps: float = RESIDUAL_EPS,
        mode: str = "multiplicative",
        potential: bool = True,
        prefix: str = "residual",
    ) -> None:
        super().__init__(prefix)
        if mode not in RESIDUAL_MODES:
            raise ValueError(f"mode must be one of {RESIDUAL_MODES}, got {mode!r}")
        if not eps > 0:
            raise ValueError(f"eps must be positive, got {eps}")
        self.n_dof = n_dof
        self.latent_dim = latent_dim
        self.eps = eps
        self.mode = mode
        self._upper = upper_selector(n_dof)
        n_upper = self._upper.shape[0]
        n_lower = n_dof * (n_dof - 1) // 2
        self.core = Stack(f"{prefix}/core", n_dof + n_upper + latent_dim, width, depth, rng)
        size = self.core.out_features
        self.lower_head = Linear(
            f"{prefix}/lower", size, n_lower, rng, activation="linear", scale=0.0
        )
        self.diag_head = Linear(f"{prefix}/diag", size, n_dof, rng, activation="linear", scale=0.0)
        parts = [self.core, self.lower_head, self.diag_head]
        self.potential_head = None
        if potential:
            self.potential_head = Linear(
                f"{prefix}/potential", size, 1, rng, activation="linear", scale=0.0
            )
            parts.append(self.potential_head)
        for part in parts:
            self._params.update(part.parameters())

    def forward(self, q: Tensor, base: DelanOutput, z: Tensor) -> ResidualOutput:
        batch, n = q.shape
        upper = ad.einsum("bij,mij->bm", base.H, self._upper)
        d_upper = ad.einsum("bijk,mij->bmk", base.dH, self._upper)
        # z does not depend on q.
        d_z = Tensor(np.zeros((batch, self.latent_dim, n)))
        d_q = Tensor(np.broadcast_to(np.eye(n), (batch, n, n)))
        x = ad.concat([q, upper, z], axis=1)
        dx = ad.concat([d_q, d_upper, d_z], axis=1)

        h, dh = self.core(x, dx)
        lower, d_lower = self.lower_head(h, dh)
        diag, d_diag = self.diag_head(h, dh)
        P, dP = assemble_symmetric(lower, d_lower, diag, d_diag, n)
        T = ad.tanh(P)
        slope = 1.0 - T * T

        if self.mode == "multiplicative":
            a = math.log1p(self.eps)
            M = ad.exp(a * T)
            dM = ad.reshape(M * slope * a, M.shape + (1,)) * dP
        else:
            scale = self.eps * np.median(np.abs(base.H.value), axis=(1, 2))
            s = Tensor(scale[:, None, None])
            M = s * T
            dM = ad.reshape(s * slope, M.shape + (1,)) * dP

        V = g = None
        if self.potential_head is not None:
            V, dV = self.potential_head(h, dh)
            V, g = ad.reshape(V, (batch,)), ad.reshape(dV, (batch, n))
        return ResidualOutput(self.mode, M, dM, V, g)


def compose(base: DelanOutput, res: ResidualOutput) -> DelanOutput:
    """Combine base and residual; multiplicative uses the product rule on dH."""
    if res.mode == "multiplicative":
        H = base.H * res.M
        dH = base.dH * ad.reshape(res.M, res.M.shape + (1,)) + (
            ad.reshape(base.H, base.H.shape + (1,)) * res.dM
        )
    else:
        H = base.H + res.M
        dH = base.dH + res.dM
    V, g = base.V, base.g
    if res.V is not None:
        V, g = V + res.V, g + res.g
    return DelanOutput(H=H, dH=dH, V=V, g=g)
