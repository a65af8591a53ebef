"""Central finite-difference oracle for gradient checks.

Relative error uses an absolute floor in the denominator: once the true
gradient drops toward the finite-difference noise floor (machine epsilon
over 2h), a pure ratio is meaningless, so tiny gradients are compared at
the floor's absolute scale instead.
"""

import numpy as np

from tmgnn.autodiff import Tape


def analytic_grads(f, tensors):
    """Tape-computed gradients of the scalar f() w.r.t. each tensor."""
    for t in tensors:
        t.grad = None
    with Tape() as tape:
        tape.backward(f())
    return [t.grad.copy() for t in tensors]


def fd_grads(f, tensors, h=1e-6):
    """Full central-difference gradients; O(2 * size) forward passes."""
    out = []
    for t in tensors:
        g = np.zeros_like(t.data)
        for idx in np.ndindex(t.data.shape):
            orig = t.data[idx]
            t.data[idx] = orig + h
            fp = float(f().data)
            t.data[idx] = orig - h
            fm = float(f().data)
            t.data[idx] = orig
            g[idx] = (fp - fm) / (2.0 * h)
        out.append(g)
    return out


def fd_coordinate(f, tensor, idx, h=1e-6):
    """Central difference along a single coordinate of one tensor."""
    orig = tensor.data[idx]
    tensor.data[idx] = orig + h
    fp = float(f().data)
    tensor.data[idx] = orig - h
    fm = float(f().data)
    tensor.data[idx] = orig
    return (fp - fm) / (2.0 * h)


def rel_error(a, b, floor=1e-6):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / denom))


def max_grad_error(f, tensors, h=1e-6, floor=1e-6):
    """Worst relative error between analytic and central-difference grads."""
    an = analytic_grads(f, tensors)
    fd = fd_grads(f, tensors, h=h)
    return max(rel_error(a, d, floor=floor) for a, d in zip(an, fd))
