"""Tape-based reverse-mode differentiation on numpy arrays.

Every op returns a new Tensor holding its parents and a closure that pushes
the output gradient back to them. Forward-mode quantities such as dH/dq are
built from the same ops, so the reverse pass differentiates through them
too.
"""

import threading
from collections.abc import Iterator, Sequence
from contextlib import contextmanager
from typing import Callable

import numpy as np

ArrayLike = np.ndarray | float | int

_state = threading.local()
_faults: dict[str, float] = {}


def _recording() -> bool:
    """False inside ``no_grad`` on this thread."""
    return not getattr(_state, "no_grad", False)


@contextmanager
def no_grad() -> Iterator[None]:
    """Disable graph recording on the current thread."""
    previous = getattr(_state, "no_grad", False)
    _state.no_grad = True
    try:
        yield
    finally:
        _state.no_grad = previous


@contextmanager
def inject_fault(primitive: str, scale: float = 1.1) -> Iterator[None]:
    """Scale the backward pass of one primitive (gradient-check fault injection)."""
    _faults[primitive] = scale
    try:
        yield
    finally:
        _faults.pop(primitive, None)


def _fault(primitive: str) -> float:
    """Backward scale for ``primitive``: 1.0 unless a fault is injected."""
    return _faults.get(primitive, 1.0)


class Tensor:
    """A float64 array node in the computation graph."""

    __slots__ = ("value", "grad", "requires_grad", "name", "_parents", "_backward")

    def __init__(
        self,
        value: ArrayLike,
        requires_grad: bool = False,
        name: str | None = None,
    ) -> None:
        self.value = np.asarray(value, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.name = name
        self._parents: tuple["Tensor", ...] = ()
        self._backward: Callable[[np.ndarray], None] | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label})"

    def numpy(self) -> np.ndarray:
        return self.value

    def zero_grad(self) -> None:
        self.grad = None

    def _accumulate(self, grad: np.ndarray) -> None:
        """Add ``grad`` into ``self.grad`` (leaf tensors only)."""
        if self.grad is None:
            self.grad = np.array(grad, dtype=np.float64)
        else:
            self.grad = self.grad + grad

    def backward(self, grad: np.ndarray | None = None) -> None:
        """Accumulate d(self)/d(leaf) into every leaf with requires_grad."""
        seed = np.ones_like(self.value) if grad is None else np.asarray(grad, np.float64)
        order = _topological_order(self)
        grads: dict[int, np.ndarray] = {id(self): seed}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                node._accumulate(g)
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                grads[key] = pg if key not in grads else grads[key] + pg

    # Operator sugar

    def __add__(self, other: "Tensor | ArrayLike") -> "Tensor":
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other: "Tensor | ArrayLike") -> "Tensor":
        return sub(self, other)

    def __rsub__(self, other: "Tensor | ArrayLike") -> "Tensor":
        return sub(other, self)

    def __mul__(self, other: "Tensor | ArrayLike") -> "Tensor":
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self) -> "Tensor":
        return mul(self, -1.0)


def as_tensor(value: "Tensor | ArrayLike") -> Tensor:
    """Wrap arrays and scalars as constant Tensors; Tensors pass through."""
    return value if isinstance(value, Tensor) else Tensor(value)


def _topological_order(root: Tensor) -> list[Tensor]:
    """Graph nodes that need gradients, parents before children.

    Args:
        root: Output tensor of the graph.

    Returns:
        Every node reachable from ``root`` through parents with
        ``requires_grad``, in post-order with ``root`` last.
    """
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in seen:
                stack.append((parent, False))
    return order


def _make(
    value: np.ndarray,
    parents: Sequence[Tensor],
    backward: Callable[[np.ndarray], Sequence[np.ndarray | None]],
) -> Tensor:
    """Output node of one op.

    Args:
        value: Forward result.
        parents: Op inputs, in the order ``backward`` returns their gradients.
        backward: Maps the output gradient to one gradient (or None) per parent.

    Returns:
        A Tensor that records ``parents`` and ``backward`` only while recording
        and when some parent requires a gradient; otherwise a constant.
    """
    out = Tensor(value)
    if _recording() and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` over the axes numpy broadcast to reach it.

    Args:
        grad: Gradient with the broadcast output shape.
        shape: Shape of the input that was broadcast.

    Returns:
        Gradient of shape ``shape``.
    """
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# Elementwise arithmetic


def add(a: Tensor | ArrayLike, b: Tensor | ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _make(a.value + b.value, (a, b), backward)


def sub(a: Tensor | ArrayLike, b: Tensor | ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return _make(a.value - b.value, (a, b), backward)


def mul(a: Tensor | ArrayLike, b: Tensor | ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return _unbroadcast(g * b.value, a.shape), _unbroadcast(g * a.value, b.shape)

    return _make(a.value * b.value, (a, b), backward)


# Contractions and reshaping


def einsum(subscripts: str, *operands: Tensor | ArrayLike) -> Tensor:
    """Explicit-output einsum (``"ab,bc->ac"``); no ellipsis, no repeated indices."""
    tensors = [as_tensor(op) for op in operands]
    inputs, output = subscripts.replace(" ", "").split("->")
    in_specs = inputs.split(",")
    if len(in_specs) != len(tensors):
        raise ValueError(f"einsum '{subscripts}' expects {len(in_specs)} operands")
    value = np.einsum(subscripts, *[t.value for t in tensors])

    def backward(g: np.ndarray) -> list[np.ndarray | None]:
        grads: list[np.ndarray | None] = []
        for i, t in enumerate(tensors):
            if not t.requires_grad:
                grads.append(None)
                continue
            others = [(s, tensors[j].value) for j, s in enumerate(in_specs) if j != i]
            available = set(output).union(*(set(s) for s, _ in others))
            kept = "".join(c for c in in_specs[i] if c in available)
            spec = ",".join([output] + [s for s, _ in others]) + "->" + kept
            gi = np.einsum(spec, g, *[v for _, v in others])
            for pos, c in enumerate(in_specs[i]):
                if c not in available:
                    gi = np.expand_dims(gi, pos)
            grads.append(np.broadcast_to(gi, t.shape))
        return grads

    return _make(np.asarray(value, dtype=np.float64), tensors, backward)


def reshape(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        return (g.reshape(a.shape),)

    return _make(a.value.reshape(shape), (a,), backward)


def transpose(a: Tensor, axes: tuple[int, ...]) -> Tensor:
    inverse = tuple(np.argsort(axes))

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        return (np.transpose(g, inverse),)

    return _make(np.transpose(a.value, axes), (a,), backward)


def swap_last(a: Tensor) -> Tensor:
    """Swap the last two axes (matrix transpose for batched matrices)."""
    axes = list(range(a.value.ndim))
    axes[-1], axes[-2] = axes[-2], axes[-1]
    return transpose(a, tuple(axes))


def concat(tensors: Sequence[Tensor | ArrayLike], axis: int = -1) -> Tensor:
    parts = [as_tensor(t) for t in tensors]
    sizes = [p.value.shape[axis] for p in parts]
    splits = np.cumsum(sizes)[:-1]

    def backward(g: np.ndarray) -> list[np.ndarray]:
        return np.split(g, splits, axis=axis)

    return _make(np.concatenate([p.value for p in parts], axis=axis), parts, backward)


def sum_(a: Tensor, axis: int | tuple[int, ...] | None = None) -> Tensor:
    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        if axis is None:
            return (np.broadcast_to(g, a.shape),)
        return (np.broadcast_to(np.expand_dims(g, axis), a.shape),)

    return _make(np.asarray(a.value.sum(axis=axis)), (a,), backward)


def mean(a: Tensor, axis: int | None = None) -> Tensor:
    count = a.value.size if axis is None else a.value.shape[axis]
    return mul(sum_(a, axis), 1.0 / count)


# Elementwise nonlinearities


def sigmoid_value(x: np.ndarray) -> np.ndarray:
    """Numerically stable logistic on plain arrays."""
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def softplus(a: Tensor) -> Tensor:
    """log(1 + e^a), computed without overflow.

    Args:
        a: Input tensor of any shape.

    Returns:
        Tensor of the same shape, strictly positive.
    """
    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        return (g * sigmoid_value(a.value) * _fault("softplus"),)

    return _make(np.logaddexp(0.0, a.value), (a,), backward)


def sigmoid(a: Tensor) -> Tensor:
    s = sigmoid_value(a.value)

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        return (g * s * (1.0 - s) * _fault("sigmoid"),)

    return _make(s, (a,), backward)


def tanh(a: Tensor) -> Tensor:
    t = np.tanh(a.value)

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        return (g * (1.0 - t * t) * _fault("tanh"),)

    return _make(t, (a,), backward)


def exp(a: Tensor) -> Tensor:
    e = np.exp(a.value)

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        return (g * e * _fault("exp"),)

    return _make(e, (a,), backward)


def square(a: Tensor) -> Tensor:
    return mul(a, a)


# Linear algebra


def solve(A: Tensor | ArrayLike, b: Tensor | ArrayLike) -> Tensor:
    """Batched solve of A x = b with A (B, N, N) and b (B, N)."""
    A, b = as_tensor(A), as_tensor(b)
    x = np.linalg.solve(A.value, b.value[..., None])[..., 0]

    def backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        gb = np.linalg.solve(np.swapaxes(A.value, -1, -2), g[..., None])[..., 0]
        gA = -gb[..., :, None] * x[..., None, :]
        return gA * _fault("solve"), gb * _fault("solve")

    return _make(x, (A, b), backward)


def stop_gradient(a: Tensor) -> Tensor:
    """Detached copy: same value, no parents."""
    return Tensor(a.value)
