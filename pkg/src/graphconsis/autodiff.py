"""Reverse-mode automatic differentiation over dense float64 arrays.

Operations are recorded eagerly: calling an op computes its value and
appends a node to an implicit tape (the ``Tensor`` DAG). ``backward`` on a
scalar loss walks the DAG in reverse topological order and accumulates
adjoints into ``Tensor.grad``.

The op set covers what the models in this package need: matrix multiply,
concatenation, elementwise add/sub/mul, exp, negation, squared L2 norm,
softmax, leaky-ReLU, sigmoid, binary cross-entropy with logits, plus row
gather/scatter and grouped reductions for batched neighborhood math.

Everything is float64; shapes are fixed per tape. ``Parameter`` extends
``Tensor`` with Adam optimizer state.
"""

from __future__ import annotations

import logging
import math
from typing import Callable, Iterable, Sequence

import numpy as np

logger = logging.getLogger("graphconsis")

Array = np.ndarray


def _as_array(x) -> Array:
    a = np.asarray(x, dtype=np.float64)
    return a


class Tensor:
    """A value in a recorded computation.

    ``parents`` and ``vjp`` are set by the op that produced the tensor;
    leaves have neither. ``grad`` is populated by :func:`backward`.
    """

    __slots__ = ("value", "grad", "_parents", "_vjp")

    def __init__(self, value, _parents: tuple = (), _vjp: Callable | None = None):
        self.value = _as_array(value)
        self.grad: Array | None = None
        self._parents = _parents
        self._vjp = _vjp

    @property
    def shape(self) -> tuple:
        return self.value.shape

    def __repr__(self) -> str:
        return f"Tensor(shape={self.value.shape})"

    def backward(self) -> None:
        backward(self)


class Parameter(Tensor):
    """Trainable leaf tensor carrying Adam optimizer state.

    Moments are allocated lazily on the first optimizer step; ``step``
    counts completed Adam updates.
    """

    __slots__ = ("name", "m", "v", "step")

    def __init__(self, value, name: str = ""):
        super().__init__(value)
        self.name = name
        self.m: Array | None = None
        self.v: Array | None = None
        self.step = 0

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        return f"Parameter({self.name!r}, shape={self.value.shape}, step={self.step})"


def constant(value) -> Tensor:
    """Wrap a raw array as a non-trainable leaf."""
    return value if isinstance(value, Tensor) else Tensor(value)


# ---------------------------------------------------------------------------
# backward pass


def _toposort(root: Tensor) -> list[Tensor]:
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
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order


def backward(loss: Tensor) -> None:
    """Accumulate adjoints of ``loss`` into ``.grad`` of every reachable tensor.

    ``loss`` must be scalar. Grads add onto any existing ``.grad`` of leaf
    tensors, so zero parameter grads before a fresh pass.
    """
    if loss.value.ndim != 0:
        raise ValueError(f"backward requires a scalar loss, got shape {loss.value.shape}")
    order = _toposort(loss)
    adjoint: dict[int, Array] = {id(loss): np.ones((), dtype=np.float64)}
    for node in reversed(order):
        g = adjoint.pop(id(node), None)
        if g is None:
            continue
        if not node._parents:
            node.grad = g if node.grad is None else node.grad + g
            continue
        for parent, pg in zip(node._parents, node._vjp(g)):
            if pg is None:
                continue
            a = adjoint.get(id(parent))
            adjoint[id(parent)] = pg if a is None else a + pg


def gradients(loss: Tensor, params: Sequence[Tensor]) -> list[Array]:
    """Backpropagate and return one gradient array per parameter.

    Parameters the loss does not depend on get zero gradients.
    """
    backward(loss)
    return [
        p.grad if p.grad is not None else np.zeros_like(p.value)
        for p in params
    ]


# ---------------------------------------------------------------------------
# ops


def _unbroadcast(grad: Array, shape: tuple) -> Array:
    """Reduce ``grad`` back to ``shape`` after numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def add(a, b) -> Tensor:
    a, b = constant(a), constant(b)
    out = a.value + b.value
    return Tensor(out, (a, b), lambda g: (_unbroadcast(g, a.value.shape), _unbroadcast(g, b.value.shape)))


def sub(a, b) -> Tensor:
    a, b = constant(a), constant(b)
    out = a.value - b.value
    return Tensor(out, (a, b), lambda g: (_unbroadcast(g, a.value.shape), _unbroadcast(-g, b.value.shape)))


def mul(a, b) -> Tensor:
    a, b = constant(a), constant(b)
    out = a.value * b.value
    return Tensor(
        out,
        (a, b),
        lambda g: (_unbroadcast(g * b.value, a.value.shape), _unbroadcast(g * a.value, b.value.shape)),
    )


def neg(a) -> Tensor:
    a = constant(a)
    return Tensor(-a.value, (a,), lambda g: (-g,))


def exp(a) -> Tensor:
    a = constant(a)
    out = np.exp(a.value)
    return Tensor(out, (a,), lambda g: (g * out,))


def matmul(a, b) -> Tensor:
    """Matrix product with numpy 1-D/2-D semantics."""
    a, b = constant(a), constant(b)
    av, bv = a.value, b.value
    out = av @ bv

    def vjp(g):
        if av.ndim == 2 and bv.ndim == 2:
            return g @ bv.T, av.T @ g
        if av.ndim == 1 and bv.ndim == 2:
            return g @ bv.T, np.outer(av, g)
        if av.ndim == 2 and bv.ndim == 1:
            return np.outer(g, bv), av.T @ g
        return g * bv, g * av  # 1-D dot product

    return Tensor(out, (a, b), vjp)


def concat(tensors: Sequence, axis: int = 0) -> Tensor:
    """Concatenate along ``axis``; gradient splits back to the inputs."""
    ts = [constant(t) for t in tensors]
    if not ts:
        raise ValueError("concat of no tensors")
    out = np.concatenate([t.value for t in ts], axis=axis)
    sizes = [t.value.shape[axis] for t in ts]
    splits = np.cumsum(sizes)[:-1]

    def vjp(g):
        return tuple(np.split(g, splits, axis=axis))

    return Tensor(out, tuple(ts), vjp)


def leaky_relu(a, slope: float = 0.01) -> Tensor:
    a = constant(a)
    mask = a.value > 0
    out = np.where(mask, a.value, slope * a.value)
    return Tensor(out, (a,), lambda g: (np.where(mask, g, slope * g),))


def _sigmoid(x: Array) -> Array:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid(a) -> Tensor:
    a = constant(a)
    out = _sigmoid(a.value)
    return Tensor(out, (a,), lambda g: (g * out * (1.0 - out),))


def softmax(a, axis: int = -1) -> Tensor:
    """Softmax along ``axis`` (a vector by default); shift-invariant and stable."""
    a = constant(a)
    if a.value.size == 0:
        raise ValueError("softmax over an empty vector")
    z = a.value - a.value.max(axis=axis, keepdims=True)
    e = np.exp(z)
    out = e / e.sum(axis=axis, keepdims=True)

    def vjp(g):
        dot = (g * out).sum(axis=axis, keepdims=True)
        return (out * (g - dot),)

    return Tensor(out, (a,), vjp)


def squared_l2(a) -> Tensor:
    """Sum of squared entries, a scalar."""
    a = constant(a)
    out = np.float64((a.value * a.value).sum())
    return Tensor(out, (a,), lambda g: (g * 2.0 * a.value,))


def bce_with_logits(logits, targets) -> Tensor:
    """Mean binary cross-entropy between ``sigmoid(logits)`` and 0/1 targets.

    Computed in the numerically stable form; ``targets`` is a constant.
    """
    logits = constant(logits)
    t = _as_array(targets.value if isinstance(targets, Tensor) else targets)
    z = logits.value
    if z.shape != t.shape:
        raise ValueError(f"logits shape {z.shape} != targets shape {t.shape}")
    if z.size == 0:
        raise ValueError("cross-entropy over an empty batch")
    per = np.maximum(z, 0.0) - z * t + np.log1p(np.exp(-np.abs(z)))
    out = np.float64(per.mean())

    def vjp(g):
        return (g * (_sigmoid(z) - t) / z.size,)

    return Tensor(out, (logits,), vjp)


def gather_rows(a, indices) -> Tensor:
    """Select rows (axis 0) by integer index; repeated rows accumulate grads."""
    a = constant(a)
    idx = np.asarray(indices, dtype=np.int64)
    out = np.take(a.value, idx, axis=0)

    def vjp(g):
        acc = np.zeros_like(a.value)
        np.add.at(acc, idx, g)
        return (acc,)

    return Tensor(out, (a,), vjp)


def group_sum(a, group_size: int) -> Tensor:
    """Sum consecutive groups of ``group_size`` rows of a 2-D tensor."""
    a = constant(a)
    n, w = a.value.shape
    if n % group_size != 0:
        raise ValueError(f"{n} rows not divisible into groups of {group_size}")
    out = a.value.reshape(n // group_size, group_size, w).sum(axis=1)

    def vjp(g):
        return (np.repeat(g, group_size, axis=0),)

    return Tensor(out, (a,), vjp)


def reshape(a, shape) -> Tensor:
    a = constant(a)
    out = a.value.reshape(shape)
    return Tensor(out, (a,), lambda g: (g.reshape(a.value.shape),))


def evaluate(t: Tensor) -> Array:
    """Forward value of a recorded tensor (values are computed eagerly)."""
    return t.value


# ---------------------------------------------------------------------------
# optimizer


def adam_step(
    params: Iterable[Parameter],
    lr: float = 0.01,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> list[Parameter]:
    """One bias-corrected Adam update per parameter, in place.

    Parameters with missing grads are treated as zero-gradient; parameters
    with non-finite grads are reported and skipped entirely. Returns the
    skipped parameters.
    """
    if lr <= 0:
        raise ValueError("learning rate must be positive")
    skipped: list[Parameter] = []
    for p in params:
        g = p.grad if p.grad is not None else np.zeros_like(p.value)
        if not np.all(np.isfinite(g)):
            logger.warning("adam: non-finite gradient for %s, step skipped", p.name or "<param>")
            skipped.append(p)
            continue
        if p.m is None:
            p.m = np.zeros_like(p.value)
            p.v = np.zeros_like(p.value)
        p.step += 1
        p.m = beta1 * p.m + (1.0 - beta1) * g
        p.v = beta2 * p.v + (1.0 - beta2) * (g * g)
        m_hat = p.m / (1.0 - beta1**p.step)
        v_hat = p.v / (1.0 - beta2**p.step)
        p.value = p.value - lr * m_hat / (np.sqrt(v_hat) + eps)
    return skipped


# ---------------------------------------------------------------------------
# numerical validation


def finite_difference_check(
    build_loss: Callable[[], Tensor],
    param: Parameter,
    epsilon: float = 1e-5,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``build_loss`` must rebuild the scalar loss from current parameter
    values on every call (tapes are single-use). The relative error per
    coordinate is ``|analytic - numeric| / max(|analytic|, |numeric|, 1e-8)``.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    param.zero_grad()
    loss = build_loss()
    if loss.value.ndim != 0:
        raise ValueError("finite_difference_check requires a scalar loss")
    backward(loss)
    analytic = param.grad.copy() if param.grad is not None else np.zeros_like(param.value)

    flat = param.value.reshape(-1)
    numeric = np.zeros_like(flat)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + epsilon
        hi = float(build_loss().value)
        flat[i] = orig - epsilon
        lo = float(build_loss().value)
        flat[i] = orig
        numeric[i] = (hi - lo) / (2.0 * epsilon)
    numeric = numeric.reshape(param.value.shape)

    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
    return float(np.max(np.abs(analytic - numeric) / denom))
