"""Fully connected layers that carry input Jacobians through the forward pass.

A layer maps ``h (B, I)`` to ``a (B, O)`` and, when given ``dh (B, I, N)``
(the derivative of its input with respect to the N joint angles), also
returns ``da (B, O, N)`` using the closed-form activation derivative.
"""

import math

import numpy as np

from invariant_osc import autodiff as ad
from invariant_osc.autodiff import Tensor

ACTIVATIONS = ("softplus", "linear")


class Module:
    """Owns named parameter Tensors under a ``prefix/`` namespace."""

    def __init__(self, prefix: str) -> None:
        self.prefix = prefix
        self._params: dict[str, Tensor] = {}

    def _param(self, name: str, value: np.ndarray) -> Tensor:
        full = f"{self.prefix}/{name}"
        tensor = Tensor(value, requires_grad=True, name=full)
        self._params[full] = tensor
        return tensor

    def parameters(self) -> dict[str, Tensor]:
        return dict(self._params)


class Linear(Module):
    """Affine layer ``W h + b`` followed by an activation."""

    def __init__(
        self,
        prefix: str,
        in_features: int,
        out_features: int,
        rng: np.random.Generator,
        *,
        activation: str = "softplus",
        scale: float | None = None,
        bias: np.ndarray | float = 0.0,
    ) -> None:
        super().__init__(prefix)
        if activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}, got {activation!r}")
        self.activation = activation
        std = 1.0 / math.sqrt(in_features) if scale is None else scale
        weight = rng.normal(0.0, std, (out_features, in_features)) if std > 0 else np.zeros(
            (out_features, in_features)
        )
        self.weight = self._param("weight", weight)
        bias = np.broadcast_to(np.asarray(bias, np.float64), (out_features,)).copy()
        self.bias = self._param("bias", bias)

    def __call__(self, h: Tensor, dh: Tensor | None = None) -> tuple[Tensor, Tensor | None]:
        z = ad.einsum("bi,oi->bo", h, self.weight) + self.bias
        dz = None if dh is None else ad.einsum("oi,bin->bon", self.weight, dh)
        if self.activation == "linear":
            return z, dz
        a = ad.softplus(z)
        da = None if dz is None else ad.reshape(ad.sigmoid(z), z.shape + (1,)) * dz
        return a, da


class Stack(Module):
    """Hidden softplus layers; ``depth`` may be zero."""

    def __init__(
        self,
        prefix: str,
        in_features: int,
        width: int,
        depth: int,
        rng: np.random.Generator,
    ) -> None:
        super().__init__(prefix)
        self.layers = []
        size = in_features
        for i in range(depth):
            layer = Linear(f"{prefix}/layer{i}", size, width, rng)
            self._params.update(layer.parameters())
            self.layers.append(layer)
            size = width
        self.out_features = size

    def __call__(self, h: Tensor, dh: Tensor | None = None) -> tuple[Tensor, Tensor | None]:
        for layer in self.layers:
            h, dh = layer(h, dh)
        return h, dh
