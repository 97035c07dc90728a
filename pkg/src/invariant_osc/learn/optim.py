"""Adaptive-moment optimiser over named parameter Tensors."""

from dataclasses import dataclass, field

import numpy as np

from invariant_osc.autodiff import Tensor


@dataclass
class OptimizerState:
    lr: float = 1e-3
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


class Adam:
    def __init__(
        self,
        params: dict[str, Tensor],
        lr: float = 1e-3,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
    ) -> None:
        self.params = params
        self.state = OptimizerState(lr=lr, betas=betas, eps=eps)
        for name, p in params.items():
            self.state.m[name] = np.zeros_like(p.value)
            self.state.v[name] = np.zeros_like(p.value)

    def step(self, grads: dict[str, np.ndarray]) -> None:
        """Update parameters in sorted-name order; missing names are skipped."""
        s = self.state
        s.step += 1
        b1, b2 = s.betas
        c1 = 1.0 - b1**s.step
        c2 = 1.0 - b2**s.step
        for name in sorted(grads):
            if name not in self.params:
                continue
            g = grads[name]
            s.m[name] = b1 * s.m[name] + (1.0 - b1) * g
            s.v[name] = b2 * s.v[name] + (1.0 - b2) * g * g
            m_hat = s.m[name] / c1
            v_hat = s.v[name] / c2
            p = self.params[name]
            p.value = p.value - s.lr * m_hat / (np.sqrt(v_hat) + s.eps)
