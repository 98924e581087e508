"""Minimal reverse-mode autodiff over numpy float64 arrays.

Just enough machinery for the placement network: dense layers, tanh,
gather/segment ops for message passing, and fused stable losses.  Values
are always float64 so finite-difference gradient checks hold to tight
tolerances.
"""

from __future__ import annotations

import numpy as np


class Tensor:
    __slots__ = ("value", "grad", "parents", "backward_fn", "requires_grad")

    def __init__(self, value, parents=(), backward_fn=None, requires_grad=False):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = None
        self.parents = parents
        self.backward_fn = backward_fn
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)

    @property
    def shape(self):
        return self.value.shape

    def item(self) -> float:
        return float(self.value)

    # Convenience operators --------------------------------------------------
    def __add__(self, other):
        return add(self, _wrap(other))

    def __radd__(self, other):
        return add(_wrap(other), self)

    def __sub__(self, other):
        return sub(self, _wrap(other))

    def __rsub__(self, other):
        return sub(_wrap(other), self)

    def __mul__(self, other):
        return mul(self, _wrap(other))

    def __rmul__(self, other):
        return mul(_wrap(other), self)

    def __matmul__(self, other):
        return matmul(self, _wrap(other))

    def __neg__(self):
        return mul(self, _wrap(-1.0))


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=np.float64))


def _accumulate(t: Tensor, g: np.ndarray):
    if t.grad is None:
        t.grad = np.array(g, dtype=np.float64)
    else:
        t.grad += g


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum out broadcast dimensions so grad matches the original shape."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


def backward(loss: Tensor):
    """Backpropagate d(loss)=1 through the tape."""
    order: list[Tensor] = []
    seen: set[int] = set()
    stack = [(loss, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            order.append(node)
            continue
        if id(node) in seen or not node.requires_grad:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            stack.append((p, False))

    loss.grad = np.ones_like(loss.value)
    for node in reversed(order):
        if node.backward_fn is not None and node.grad is not None:
            node.backward_fn(node.grad)


# ---------------------------------------------------------------------------
# Primitive ops
# ---------------------------------------------------------------------------


def add(a: Tensor, b: Tensor) -> Tensor:
    out = Tensor(a.value + b.value, (a, b))

    def bw(g):
        if a.requires_grad:
            _accumulate(a, _unbroadcast(g, a.value.shape))
        if b.requires_grad:
            _accumulate(b, _unbroadcast(g, b.value.shape))

    out.backward_fn = bw
    return out


def sub(a: Tensor, b: Tensor) -> Tensor:
    out = Tensor(a.value - b.value, (a, b))

    def bw(g):
        if a.requires_grad:
            _accumulate(a, _unbroadcast(g, a.value.shape))
        if b.requires_grad:
            _accumulate(b, _unbroadcast(-g, b.value.shape))

    out.backward_fn = bw
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    out = Tensor(a.value * b.value, (a, b))

    def bw(g):
        if a.requires_grad:
            _accumulate(a, _unbroadcast(g * b.value, a.value.shape))
        if b.requires_grad:
            _accumulate(b, _unbroadcast(g * a.value, b.value.shape))

    out.backward_fn = bw
    return out


def matmul(a: Tensor, b: Tensor) -> Tensor:
    out = Tensor(a.value @ b.value, (a, b))

    def bw(g):
        if a.requires_grad:
            _accumulate(a, g @ b.value.T)
        if b.requires_grad:
            _accumulate(b, a.value.T @ g)

    out.backward_fn = bw
    return out


def tanh(a: Tensor) -> Tensor:
    y = np.tanh(a.value)
    out = Tensor(y, (a,))

    def bw(g):
        if a.requires_grad:
            _accumulate(a, g * (1.0 - y * y))

    out.backward_fn = bw
    return out


def exp(a: Tensor) -> Tensor:
    y = np.exp(a.value)
    out = Tensor(y, (a,))

    def bw(g):
        if a.requires_grad:
            _accumulate(a, g * y)

    out.backward_fn = bw
    return out


def square(a: Tensor) -> Tensor:
    out = Tensor(a.value * a.value, (a,))

    def bw(g):
        if a.requires_grad:
            _accumulate(a, g * 2.0 * a.value)

    out.backward_fn = bw
    return out


def absolute(a: Tensor) -> Tensor:
    out = Tensor(np.abs(a.value), (a,))

    def bw(g):
        if a.requires_grad:
            _accumulate(a, g * np.sign(a.value))

    out.backward_fn = bw
    return out


def concat(tensors: list[Tensor], axis: int = 1) -> Tensor:
    out = Tensor(np.concatenate([t.value for t in tensors], axis=axis), tuple(tensors))
    sizes = [t.value.shape[axis] for t in tensors]

    def bw(g):
        start = 0
        for t, size in zip(tensors, sizes):
            sl = [slice(None)] * g.ndim
            sl[axis] = slice(start, start + size)
            if t.requires_grad:
                _accumulate(t, g[tuple(sl)])
            start += size

    out.backward_fn = bw
    return out


def gather_rows(a: Tensor, idx: np.ndarray) -> Tensor:
    idx = np.asarray(idx, dtype=np.intp)
    out = Tensor(a.value[idx], (a,))

    def bw(g):
        if a.requires_grad:
            acc = np.zeros_like(a.value)
            np.add.at(acc, idx, g)
            _accumulate(a, acc)

    out.backward_fn = bw
    return out


def segment_mean(a: Tensor, seg: np.ndarray, num_segments: int) -> Tensor:
    """Mean of rows of ``a`` grouped by segment id; empty segments are zero."""
    seg = np.asarray(seg, dtype=np.intp)
    counts = np.bincount(seg, minlength=num_segments).astype(np.float64)
    safe = np.maximum(counts, 1.0)
    summed = np.zeros((num_segments,) + a.value.shape[1:], dtype=np.float64)
    np.add.at(summed, seg, a.value)
    out = Tensor(summed / safe.reshape((-1,) + (1,) * (a.value.ndim - 1)), (a,))

    def bw(g):
        if a.requires_grad:
            scaled = g / safe.reshape((-1,) + (1,) * (g.ndim - 1))
            _accumulate(a, scaled[seg])

    out.backward_fn = bw
    return out


def sum_axis(a: Tensor, axis: int) -> Tensor:
    out = Tensor(a.value.sum(axis=axis), (a,))

    def bw(g):
        if a.requires_grad:
            _accumulate(a, np.expand_dims(g, axis) * np.ones_like(a.value))

    out.backward_fn = bw
    return out


def mean_all(a: Tensor) -> Tensor:
    n = a.value.size
    out = Tensor(a.value.mean(), (a,))

    def bw(g):
        if a.requires_grad:
            _accumulate(a, np.full_like(a.value, float(g) / n))

    out.backward_fn = bw
    return out


def softmax_cross_entropy(logits: Tensor, targets: np.ndarray) -> Tensor:
    """Per-row CE of a softmax over the last axis; stable log-sum-exp."""
    targets = np.asarray(targets, dtype=np.intp)
    z = logits.value
    zmax = z.max(axis=1, keepdims=True)
    lse = zmax[:, 0] + np.log(np.exp(z - zmax).sum(axis=1))
    losses = lse - z[np.arange(len(targets)), targets]
    out = Tensor(losses, (logits,))

    def bw(g):
        if logits.requires_grad:
            soft = np.exp(z - zmax)
            soft /= soft.sum(axis=1, keepdims=True)
            soft[np.arange(len(targets)), targets] -= 1.0
            _accumulate(logits, soft * g[:, None])

    out.backward_fn = bw
    return out


def sigmoid_bce(logits: Tensor, targets: np.ndarray) -> Tensor:
    """Per-element binary cross-entropy on logits; numerically stable."""
    targets = np.asarray(targets, dtype=np.float64)
    z = logits.value
    losses = np.maximum(z, 0.0) - z * targets + np.log1p(np.exp(-np.abs(z)))
    out = Tensor(losses, (logits,))

    def bw(g):
        if logits.requires_grad:
            sig = 1.0 / (1.0 + np.exp(-z))
            _accumulate(logits, (sig - targets) * g)

    out.backward_fn = bw
    return out
