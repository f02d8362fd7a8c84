"""Dense tensors with reverse-mode automatic differentiation.

A Tensor wraps a float32 or float64 numpy array. Operations build a
computation graph on the fly whenever an input has requires_grad set and
grad recording is enabled; calling backward() on a scalar result walks the
graph in reverse topological order and accumulates gradients additively,
so a value used twice receives the sum of both contributions.

float32 is the working precision for training; float64 exists for
finite-difference gradient checking, where float32 rounding noise would
swamp the comparison. Mixing the two in one operation is an error rather
than a silent promotion.
"""

from __future__ import annotations

import contextlib

import numpy as np

from .errors import NumericsError

_grad_enabled = True
_finite_checks = False

FLOAT_DTYPES = (np.float32, np.float64)


@contextlib.contextmanager
def no_grad():
    """Disable graph recording inside the block (inference/evaluation)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def set_finite_checks(enabled):
    """Toggle the debug mode that aborts on any non-finite op result.

    Off by default: the check costs a full pass over every result. Returns
    the previous setting.
    """
    global _finite_checks
    prev = _finite_checks
    _finite_checks = bool(enabled)
    return prev


class Tensor:
    """A numpy array plus the bookkeeping needed for backpropagation."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "_op")

    def __init__(self, data, requires_grad=False, dtype=None):
        if isinstance(data, np.ndarray):
            if dtype is not None:
                data = data.astype(dtype, copy=False)
            elif data.dtype not in FLOAT_DTYPES:
                data = data.astype(np.float32)
        else:
            data = np.asarray(data, dtype=(dtype or np.float32))
        self.data = data
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = ()
        self._backward = None
        self._op = "leaf"

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self):
        return self.data.size

    def zero_grad(self):
        self.grad = None

    def backward(self):
        backward(self)

    def __add__(self, other):
        return add(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __pow__(self, q):
        return power(self, q)

    def __repr__(self):
        return f"Tensor(shape={tuple(self.shape)}, dtype={self.data.dtype.name}, op={self._op})"


def _result(data, parents, backward_fn, op):
    """Wrap an op result, attaching graph edges only when recording."""
    if _finite_checks and not np.all(np.isfinite(data)):
        raise NumericsError(f"non-finite values produced by '{op}'")
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    out._op = op
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward_fn
    else:
        out.requires_grad = False
        out._parents = ()
        out._backward = None
    return out


def _check_same_dtype(op, *tensors):
    dt = tensors[0].data.dtype
    for t in tensors[1:]:
        if t.data.dtype != dt:
            raise ValueError(f"{op}: mixed dtypes {dt} and {t.data.dtype}")


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum; shapes must match exactly."""
    _check_same_dtype("add", a, b)
    if a.shape != b.shape:
        raise ValueError(f"add: shape mismatch {a.shape} vs {b.shape}")

    def bwd(g):
        return g, g

    return _result(a.data + b.data, (a, b), bwd, "add")


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product; shapes must match exactly."""
    _check_same_dtype("mul", a, b)
    if a.shape != b.shape:
        raise ValueError(f"mul: shape mismatch {a.shape} vs {b.shape}")

    def bwd(g):
        return g * b.data, g * a.data

    return _result(a.data * b.data, (a, b), bwd, "mul")


def power(x: Tensor, q) -> Tensor:
    """x raised elementwise to a positive integer power.

    Computed by repeated multiplication, never via exp/log, so integer
    powers of negative inputs are exact. q = 0 is rejected: the constant
    term of a polynomial layer lives in its bias, not here.
    """
    if not isinstance(q, (int, np.integer)) or q < 1:
        raise ValueError(f"power: order must be a positive integer, got {q!r}")
    if q == 1:
        return x
    y = x.data
    for _ in range(q - 1):
        y = y * x.data

    def bwd(g):
        d = x.data
        for _ in range(q - 2):
            d = d * x.data
        return (g * (q * d),)

    return _result(y, (x,), bwd, f"pow{q}")


def tanh(x: Tensor) -> Tensor:
    y = np.tanh(x.data)

    def bwd(g):
        return (g * (1.0 - y * y),)

    return _result(y, (x,), bwd, "tanh")


def sigmoid(x: Tensor) -> Tensor:
    # Piecewise form avoids exp overflow for large negative inputs.
    d = x.data
    y = np.empty_like(d)
    pos = d >= 0
    y[pos] = 1.0 / (1.0 + np.exp(-d[pos]))
    ex = np.exp(d[~pos])
    y[~pos] = ex / (1.0 + ex)

    def bwd(g):
        return (g * y * (1.0 - y),)

    return _result(y, (x,), bwd, "sigmoid")


def concat_channels(a: Tensor, b: Tensor) -> Tensor:
    """Concatenate two (N, C, H, W) tensors along the channel axis."""
    _check_same_dtype("concat_channels", a, b)
    if a.data.ndim != 4 or b.data.ndim != 4:
        raise ValueError("concat_channels: inputs must be 4-D (N, C, H, W)")
    if a.shape[0] != b.shape[0] or a.shape[2:] != b.shape[2:]:
        raise ValueError(f"concat_channels: batch/spatial mismatch {a.shape} vs {b.shape}")
    ca = a.shape[1]

    def bwd(g):
        return g[:, :ca], g[:, ca:]

    return _result(np.concatenate([a.data, b.data], axis=1), (a, b), bwd, "concat")


def take(x: Tensor, index) -> Tensor:
    """Select one slice along the first axis (differentiable indexing)."""
    index = int(index)
    if not 0 <= index < x.shape[0]:
        raise ValueError(f"take: index {index} out of range for axis of size {x.shape[0]}")

    def bwd(g):
        full = np.zeros_like(x.data)
        full[index] = g
        return (full,)

    return _result(x.data[index].copy(), (x,), bwd, f"take[{index}]")


def tensor_sum(x: Tensor) -> Tensor:
    """Sum of all elements, as a scalar tensor."""

    def bwd(g):
        return (np.full_like(x.data, float(g)),)

    return _result(np.asarray(x.data.sum(), dtype=x.data.dtype), (x,), bwd, "sum")


BCE_EPS = 1e-7


def bce_loss(pred: Tensor, target: Tensor) -> Tensor:
    """Mean binary cross-entropy.

    Predictions are clamped to [1e-7, 1 - 1e-7] before the logs; clamped
    elements get zero gradient. Targets must be strictly 0/1.
    """
    if pred.shape != target.shape:
        raise ValueError(f"bce_loss: shape mismatch {pred.shape} vs {target.shape}")
    t = target.data
    if not np.all((t == 0) | (t == 1)):
        raise ValueError("bce_loss: target values must be exactly 0 or 1")
    p = np.clip(pred.data, BCE_EPS, 1.0 - BCE_EPS)
    loss = -(t * np.log(p) + (1.0 - t) * np.log1p(-p)).mean()
    n = p.size

    def bwd(g):
        inside = (pred.data > BCE_EPS) & (pred.data < 1.0 - BCE_EPS)
        dp = (p - t) / (p * (1.0 - p) * n)
        return (g * dp * inside, None)

    return _result(np.asarray(loss, dtype=pred.data.dtype), (pred, target), bwd, "bce")


def backward(root: Tensor):
    """Populate grads of every requires_grad tensor reachable from root.

    root must be scalar-valued. Gradients accumulate additively across
    fan-out; leaves keep whatever grad they already had plus the new
    contribution, so call zero_grad between training steps.
    """
    if root.data.size != 1:
        raise ValueError(f"backward: root must be scalar, got shape {tuple(root.shape)}")

    # Iterative reverse topological order over the requires_grad subgraph.
    topo = []
    visited = set()
    stack = [(root, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            topo.append(node)
            continue
        if id(node) in visited or not node.requires_grad:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            stack.append((p, False))

    if root.grad is None:
        root.grad = np.ones_like(root.data)
    for node in reversed(topo):
        if node._backward is None:
            continue
        grads = node._backward(node.grad)
        for parent, g in zip(node._parents, grads):
            if g is None or not parent.requires_grad:
                continue
            if parent.grad is None:
                parent.grad = g
            else:
                parent.grad = parent.grad + g
