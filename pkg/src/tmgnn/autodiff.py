"""Minimal dense-tensor reverse-mode autodiff engine.

Tensors wrap float64 numpy arrays. Operations executed inside a
``with Tape() as tape:`` block append records to the tape in creation
order, which is automatically a topological order, so ``tape.backward``
is a single reverse sweep that visits each record exactly once. Outside
a tape, operations are plain forward computations.

Gradients accumulate into the ``grad`` field of ``requires_grad`` leaf
tensors; intermediate gradients live only for the duration of the sweep.
"""

import numpy as np

from .errors import ConfigurationError, ContractError, ShapeError

_TAPE_STACK = []


def _active_tape():
    return _TAPE_STACK[-1] if _TAPE_STACK else None


class Tensor:
    """Dense row-major float64 array with optional gradient and tape link."""

    __slots__ = ("data", "requires_grad", "grad", "tape_id", "_tape")

    def __init__(self, data, requires_grad=False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self.tape_id = None
        self._tape = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    def zero_grad(self):
        self.grad = None

    def detach(self):
        return Tensor(self.data.copy())

    # Arithmetic sugar; all routed through the module-level ops.
    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def sum(self, axis=None):
        return tensor_sum(self, axis=axis)

    def mean(self, axis=None):
        return tensor_mean(self, axis=axis)

    def transpose(self):
        return transpose(self)

    def reshape(self, shape):
        return reshape(self, shape)


class _Record:
    """One tape entry: inputs, produced output, and its local gradient rule."""

    __slots__ = ("inputs", "output", "backward_fn")

    def __init__(self, inputs, output, backward_fn):
        self.inputs = inputs
        self.output = output
        self.backward_fn = backward_fn


class Tape:
    """Ordered record of operations for one reverse-mode sweep."""

    def __init__(self):
        self.records = []
        self._leaves = {}

    def __enter__(self):
        _TAPE_STACK.append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        popped = _TAPE_STACK.pop()
        assert popped is self
        return False

    def _add(self, inputs, output, backward_fn):
        output.tape_id = len(self.records)
        output._tape = self
        self.records.append(_Record(inputs, output, backward_fn))
        for x in inputs:
            if x.requires_grad and x._tape is not self:
                self._leaves[id(x)] = x

    def backward(self, loss):
        """Populate ``grad`` on every requires_grad leaf seen by this tape.

        Leaves not reachable from ``loss`` receive zero gradients.
        """
        if loss.data.size != 1:
            raise ContractError(
                f"backward requires a scalar loss, got shape {loss.data.shape}"
            )
        grads = {}
        if loss._tape is self:
            grads[loss.tape_id] = np.ones_like(loss.data)
            for idx in range(len(self.records) - 1, -1, -1):
                gout = grads.pop(idx, None)
                if gout is None:
                    continue
                rec = self.records[idx]
                for x, gx in zip(rec.inputs, rec.backward_fn(gout)):
                    if gx is None:
                        continue
                    if x._tape is self:
                        tid = x.tape_id
                        if tid in grads:
                            grads[tid] = grads[tid] + gx
                        else:
                            grads[tid] = gx
                    elif x.requires_grad:
                        x.grad = gx if x.grad is None else x.grad + gx
        for leaf in self._leaves.values():
            if leaf.grad is None:
                leaf.grad = np.zeros_like(leaf.data)


def _as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _emit(inputs, out_data, backward_fn):
    out = Tensor(out_data)
    tape = _active_tape()
    if tape is not None and any(
        x.requires_grad or x._tape is tape for x in inputs
    ):
        tape._add(inputs, out, backward_fn)
    return out


def _unbroadcast(grad, shape):
    """Sum a broadcast gradient back down to ``shape``."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, dim in enumerate(shape) if dim == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def add(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    out = a.data + b.data
    ash, bsh = a.data.shape, b.data.shape
    return _emit(
        (a, b), out,
        lambda g: (_unbroadcast(g, ash), _unbroadcast(g, bsh)),
    )


def sub(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    out = a.data - b.data
    ash, bsh = a.data.shape, b.data.shape
    return _emit(
        (a, b), out,
        lambda g: (_unbroadcast(g, ash), _unbroadcast(-g, bsh)),
    )


def mul(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    out = a.data * b.data
    ad, bd = a.data, b.data
    return _emit(
        (a, b), out,
        lambda g: (_unbroadcast(g * bd, ad.shape), _unbroadcast(g * ad, bd.shape)),
    )


def neg(a):
    a = _as_tensor(a)
    return _emit((a,), -a.data, lambda g: (-g,))


def scale(a, c):
    """Multiply by a plain (non-learnable) scalar constant."""
    a = _as_tensor(a)
    c = float(c)
    return _emit((a,), a.data * c, lambda g: (g * c,))


def matmul(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
        raise ShapeError(
            f"matmul expects (m,k) x (k,n); got {a.data.shape} and {b.data.shape}"
        )
    ad, bd = a.data, b.data
    return _emit(
        (a, b), ad @ bd,
        lambda g: (g @ bd.T, ad.T @ g),
    )


def transpose(a):
    a = _as_tensor(a)
    if a.data.ndim != 2:
        raise ShapeError(f"transpose expects a 2-D tensor, got shape {a.data.shape}")
    return _emit((a,), a.data.T.copy(), lambda g: (g.T,))


def reshape(a, shape):
    a = _as_tensor(a)
    old = a.data.shape
    return _emit((a,), a.data.reshape(shape), lambda g: (g.reshape(old),))


def concat(parts, axis=0):
    parts = tuple(_as_tensor(p) for p in parts)
    if not parts:
        raise ContractError("concat requires at least one tensor")
    out = np.concatenate([p.data for p in parts], axis=axis)
    offsets = np.cumsum([p.data.shape[axis] for p in parts])[:-1]

    def backward(g):
        return tuple(np.split(g, offsets, axis=axis))

    return _emit(parts, out, backward)


def tensor_sum(a, axis=None):
    a = _as_tensor(a)
    shape = a.data.shape
    out = a.data.sum(axis=axis)

    def backward(g):
        if axis is None:
            return (np.broadcast_to(g, shape).copy(),)
        return (np.broadcast_to(np.expand_dims(g, axis), shape).copy(),)

    return _emit((a,), out, backward)


def tensor_mean(a, axis=None):
    a = _as_tensor(a)
    shape = a.data.shape
    count = a.data.size if axis is None else shape[axis]
    out = a.data.mean(axis=axis)

    def backward(g):
        if axis is None:
            return (np.broadcast_to(g / count, shape).copy(),)
        return (np.broadcast_to(np.expand_dims(g, axis) / count, shape).copy(),)

    return _emit((a,), out, backward)


def absolute(a):
    a = _as_tensor(a)
    sign = np.sign(a.data)
    return _emit((a,), np.abs(a.data), lambda g: (g * sign,))


_ACTIVATIONS = ("sigmoid", "tanh", "relu", "identity")


def activation(x, kind):
    """Elementwise non-linearity: sigmoid, tanh, relu or identity."""
    x = _as_tensor(x)
    if kind == "sigmoid":
        out = 1.0 / (1.0 + np.exp(-x.data))
        deriv = out * (1.0 - out)
    elif kind == "tanh":
        out = np.tanh(x.data)
        deriv = 1.0 - out * out
    elif kind == "relu":
        out = np.maximum(x.data, 0.0)
        deriv = (x.data > 0.0).astype(np.float64)
    elif kind == "identity":
        return _emit((x,), x.data.copy(), lambda g: (g,))
    else:
        raise ConfigurationError(
            f"unknown activation {kind!r}; expected one of {_ACTIVATIONS}"
        )
    return _emit((x,), out, lambda g: (g * deriv,))


def sigmoid(x):
    return activation(x, "sigmoid")


def tanh(x):
    return activation(x, "tanh")


def relu(x):
    return activation(x, "relu")


def softmax_rows(x):
    """Row-wise softmax with max-subtraction for overflow safety."""
    x = _as_tensor(x)
    if x.data.ndim != 2:
        raise ShapeError(f"softmax_rows expects a 2-D tensor, got {x.data.shape}")
    shifted = x.data - x.data.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=1, keepdims=True)

    def backward(g):
        dot = (g * y).sum(axis=1, keepdims=True)
        return (y * (g - dot),)

    return _emit((x,), y, backward)


def straight_through(soft, hard_data):
    """Forward the hard values, route gradients to the soft relaxation."""
    soft = _as_tensor(soft)
    hard_data = np.asarray(hard_data, dtype=np.float64)
    if hard_data.shape != soft.data.shape:
        raise ShapeError(
            f"straight_through shapes differ: {hard_data.shape} vs {soft.data.shape}"
        )
    return _emit((soft,), hard_data.copy(), lambda g: (g,))


def one_hot_rows(indices, width):
    """Plain (non-differentiable) one-hot matrix, one row per index."""
    indices = np.asarray(indices, dtype=np.int64)
    out = np.zeros((indices.size, width), dtype=np.float64)
    out[np.arange(indices.size), indices] = 1.0
    return out


def gumbel_softmax(logits, temperature=1.0, hard=True, rng=None, noise=None):
    """Sample a (relaxed) categorical per row of ``logits``.

    Soft mode returns softmax((logits + g) / temperature). Hard mode
    returns exact one-hot rows at the perturbed argmax with the
    straight-through gradient of the soft sample. ``noise`` overrides the
    Gumbel draw (used for frozen-noise tests and the zero-noise limit).
    """
    logits = _as_tensor(logits)
    if temperature <= 0:
        raise ConfigurationError(f"temperature must be positive, got {temperature}")
    if logits.data.ndim != 2:
        raise ShapeError(f"gumbel_softmax expects 2-D logits, got {logits.data.shape}")
    if noise is None:
        if rng is None:
            raise ConfigurationError("gumbel_softmax needs an rng when noise is not given")
        noise = rng.gumbel(logits.data.shape)
    noise = np.broadcast_to(np.asarray(noise, dtype=np.float64), logits.data.shape)
    soft = softmax_rows(scale(add(logits, Tensor(noise)), 1.0 / temperature))
    if not hard:
        return soft
    hard_rows = one_hot_rows(soft.data.argmax(axis=1), soft.data.shape[1])
    return straight_through(soft, hard_rows)
