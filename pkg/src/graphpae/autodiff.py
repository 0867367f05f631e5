"""Minimal define-by-run reverse-mode autodiff on dense float64 arrays.

Each op builds a `Tensor` holding its value, its parents, and a closure that
scatters the incoming adjoint back to the parents. `backward` runs the
closures once each in reverse topological order, so gradients are
deterministic for a fixed graph.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractError, ShapeError
from . import kernels

LEAKY_SLOPE = 0.2


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_backward")

    def __init__(self, data, parents=(), backward=None, requires_grad=False, name=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self.name = name
        self._parents = parents
        self._backward = backward

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.data.shape}{tag})"

    # operator sugar; all arithmetic routes through the module-level ops
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def parameter(data, name=None):
    return Tensor(np.array(data, dtype=np.float64), requires_grad=True, name=name)


def _accum(t: Tensor, g: np.ndarray):
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def _unbroadcast(grad: np.ndarray, shape) -> np.ndarray:
    """Reduce `grad` back to `shape` after NumPy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and grad.shape[ax] != 1:
            grad = grad.sum(axis=ax, keepdims=True)
    return grad.reshape(shape)


def _track(parents):
    return any(p.requires_grad or p._parents for p in parents)


def _make(data, parents, backward):
    if _track(parents):
        return Tensor(data, parents=tuple(parents), backward=backward)
    return Tensor(data)


# ---------------------------------------------------------------------------
# arithmetic


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    out = a.data + b.data

    def bwd(g):
        _accum(a, _unbroadcast(g, a.data.shape))
        _accum(b, _unbroadcast(g, b.data.shape))

    return _make(out, (a, b), bwd)


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    out = a.data - b.data

    def bwd(g):
        _accum(a, _unbroadcast(g, a.data.shape))
        _accum(b, _unbroadcast(-g, b.data.shape))

    return _make(out, (a, b), bwd)


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    out = a.data * b.data

    def bwd(g):
        _accum(a, _unbroadcast(g * b.data, a.data.shape))
        _accum(b, _unbroadcast(g * a.data, b.data.shape))

    return _make(out, (a, b), bwd)


def div(a, b):
    a, b = as_tensor(a), as_tensor(b)
    out = a.data / b.data

    def bwd(g):
        _accum(a, _unbroadcast(g / b.data, a.data.shape))
        _accum(b, _unbroadcast(-g * a.data / (b.data * b.data), b.data.shape))

    return _make(out, (a, b), bwd)


def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ShapeError(f"matmul expects 2-D operands, got {a.data.shape} and {b.data.shape}")
    if a.data.shape[1] != b.data.shape[0]:
        raise ShapeError(f"matmul shape mismatch: {a.data.shape} @ {b.data.shape}")
    out = a.data @ b.data

    def bwd(g):
        _accum(a, g @ b.data.T)
        _accum(b, a.data.T @ g)

    return _make(out, (a, b), bwd)


# ---------------------------------------------------------------------------
# shape ops


def reshape(a, shape):
    a = as_tensor(a)
    out = a.data.reshape(shape)

    def bwd(g):
        _accum(a, g.reshape(a.data.shape))

    return _make(out, (a,), bwd)


def concat(tensors, axis=-1):
    tensors = [as_tensor(t) for t in tensors]
    out = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def bwd(g):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            idx = [slice(None)] * g.ndim
            idx[axis if axis >= 0 else g.ndim + axis] = slice(lo, hi)
            _accum(t, g[tuple(idx)])

    return _make(out, tuple(tensors), bwd)


def gather_rows(a, index):
    a = as_tensor(a)
    index = np.asarray(index, dtype=np.int64)
    out = a.data[index]

    def bwd(g):
        if a.grad is None:
            a.grad = np.zeros_like(a.data)
        if a.data.ndim == 2 and g.ndim == 2:
            kernels.index_add_rows(a.grad, index, g)
        else:
            np.add.at(a.grad, index, g)

    return _make(out, (a,), bwd)


# ---------------------------------------------------------------------------
# segment ops (edge-list message passing)


def segment_sum(a, segments, num_segments):
    a = as_tensor(a)
    if a.data.ndim != 2:
        raise ShapeError(f"segment_sum expects 2-D values, got {a.data.shape}")
    segments = np.asarray(segments, dtype=np.int64)
    out = kernels.segment_sum(a.data, segments, num_segments)

    def bwd(g):
        _accum(a, g[segments])

    return _make(out, (a,), bwd)


def segment_softmax(a, segments, num_segments):
    """Column-wise softmax over entries sharing a segment id."""
    a = as_tensor(a)
    if a.data.ndim != 2:
        raise ShapeError(f"segment_softmax expects 2-D values, got {a.data.shape}")
    segments = np.asarray(segments, dtype=np.int64)
    mx = kernels.segment_max(a.data, segments, num_segments)
    shifted = a.data - mx[segments]
    ex = np.exp(shifted)
    denom = kernels.segment_sum(ex, segments, num_segments)
    soft = ex / denom[segments]

    def bwd(g):
        dot = kernels.segment_sum(g * soft, segments, num_segments)
        _accum(a, soft * (g - dot[segments]))

    return _make(soft, (a,), bwd)


# ---------------------------------------------------------------------------
# elementwise nonlinearities


def relu(a):
    a = as_tensor(a)
    mask = a.data > 0
    out = np.where(mask, a.data, 0.0)

    def bwd(g):
        _accum(a, g * mask)

    return _make(out, (a,), bwd)


def leaky_relu(a, slope=LEAKY_SLOPE):
    a = as_tensor(a)
    mask = a.data > 0
    out = np.where(mask, a.data, slope * a.data)

    def bwd(g):
        _accum(a, g * np.where(mask, 1.0, slope))

    return _make(out, (a,), bwd)


def sigmoid(a):
    a = as_tensor(a)
    out = 1.0 / (1.0 + np.exp(-a.data))

    def bwd(g):
        _accum(a, g * out * (1.0 - out))

    return _make(out, (a,), bwd)


def exp(a):
    a = as_tensor(a)
    out = np.exp(a.data)

    def bwd(g):
        _accum(a, g * out)

    return _make(out, (a,), bwd)


def sqrt(a):
    a = as_tensor(a)
    out = np.sqrt(a.data)

    def bwd(g):
        _accum(a, g * 0.5 / out)

    return _make(out, (a,), bwd)


def square(a):
    a = as_tensor(a)

    def bwd(g):
        _accum(a, g * 2.0 * a.data)

    return _make(a.data * a.data, (a,), bwd)


def absval(a):
    a = as_tensor(a)
    out = np.abs(a.data)

    def bwd(g):
        _accum(a, g * np.sign(a.data))

    return _make(out, (a,), bwd)


def softplus(a):
    a = as_tensor(a)
    # stable: log1p(exp(-|x|)) + max(x, 0)
    out = np.log1p(np.exp(-np.abs(a.data))) + np.maximum(a.data, 0.0)
    sig = 1.0 / (1.0 + np.exp(-a.data))

    def bwd(g):
        _accum(a, g * sig)

    return _make(out, (a,), bwd)


def powc(a, p):
    """a ** p for a >= 0 and constant exponent p >= 1."""
    a = as_tensor(a)
    out = np.power(a.data, p)

    def bwd(g):
        base = np.power(np.maximum(a.data, 1e-300), p - 1.0) if p != 1.0 else np.ones_like(a.data)
        _accum(a, g * p * base)

    return _make(out, (a,), bwd)


def huber(a):
    """Elementwise Huber with unit threshold: x**2/2 below 1, |x| - 1/2 above."""
    a = as_tensor(a)
    small = np.abs(a.data) < 1.0
    out = np.where(small, 0.5 * a.data * a.data, np.abs(a.data) - 0.5)

    def bwd(g):
        _accum(a, g * np.where(small, a.data, np.sign(a.data)))

    return _make(out, (a,), bwd)


# ---------------------------------------------------------------------------
# reductions


def sum_(a, axis=None, keepdims=False):
    a = as_tensor(a)
    out = a.data.sum(axis=axis, keepdims=keepdims)

    def bwd(g):
        if axis is None:
            _accum(a, np.broadcast_to(g, a.data.shape).copy())
        else:
            if not keepdims:
                g = np.expand_dims(g, axis)
            _accum(a, np.broadcast_to(g, a.data.shape).copy())

    return _make(out, (a,), bwd)


def mean(a, axis=None, keepdims=False):
    a = as_tensor(a)
    n = a.data.size if axis is None else a.data.shape[axis]
    return mul(sum_(a, axis=axis, keepdims=keepdims), 1.0 / n)


def norm_rows(a, eps=0.0):
    """L2 norm over the last axis."""
    return sqrt(sum_(square(a), axis=-1) + eps)


def dropout(a, rate, rng):
    """Inverted dropout; identity when rate == 0."""
    if rate <= 0.0:
        return as_tensor(a)
    a = as_tensor(a)
    keep = (rng.random(a.data.shape) >= rate) / (1.0 - rate)
    return mul(a, keep)


# ---------------------------------------------------------------------------
# backward pass


def _topo(root: Tensor):
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
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


def backward(loss: Tensor):
    """Populate .grad on every tensor reachable from `loss`."""
    if loss.data.size != 1:
        raise ContractError(f"loss must be scalar, got shape {loss.data.shape}")
    order = _topo(loss)
    loss.grad = np.ones_like(loss.data)
    for node in reversed(order):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)


def grad_or_zero(p: Tensor) -> np.ndarray:
    return p.grad if p.grad is not None else np.zeros_like(p.data)


def zero_grad(params):
    for p in params.values() if isinstance(params, dict) else params:
        p.grad = None


def finite_diff_check(fn, params, h=1e-5):
    """Worst relative error between tape gradients of fn() and central differences.

    `fn` must be a deterministic closure over the parameter tensors in
    `params` (a name -> Tensor dict) returning a scalar Tensor.
    """
    zero_grad(params)
    loss = fn()
    backward(loss)
    grads = {k: grad_or_zero(p).copy() for k, p in params.items()}

    worst = 0.0
    for name, p in params.items():
        flat = p.data.ravel()
        gflat = grads[name].ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            fp = float(fn().data)
            flat[i] = orig - h
            fm = float(fn().data)
            flat[i] = orig
            fd = (fp - fm) / (2.0 * h)
            err = abs(fd - gflat[i]) / max(abs(fd), abs(gflat[i]), 1e-6)
            worst = max(worst, err)
    return worst
