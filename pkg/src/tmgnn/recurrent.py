"""LSTM and GRU cells over row-vector states, built on the autodiff ops."""

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import ConfigurationError, ShapeError
from .mgn import _uniform_param, _zero_param

_LSTM_GATES = ("i", "f", "o", "c")
_GRU_GATES = ("z", "r", "h")


@dataclass
class RecurrentState:
    """Hidden state h and, for LSTM only, cell state c; both (1, d_h)."""

    h: Tensor
    c: Tensor = None

    def detach(self):
        return RecurrentState(
            h=self.h.detach(), c=self.c.detach() if self.c is not None else None
        )


def initial_state(hidden_dim, kind="lstm"):
    h = Tensor(np.zeros((1, hidden_dim)))
    if kind == "lstm":
        return RecurrentState(h=h, c=Tensor(np.zeros((1, hidden_dim))))
    return RecurrentState(h=h)


def init_recurrent_params(kind, input_dim, hidden_dim, rng, prefix="rnn"):
    if kind not in ("lstm", "gru"):
        raise ConfigurationError(f"cell kind must be 'lstm' or 'gru', got {kind!r}")
    gates = _LSTM_GATES if kind == "lstm" else _GRU_GATES
    params = {}
    for g in gates:
        params[f"{prefix}.w{g}"] = _uniform_param(rng, input_dim, (input_dim, hidden_dim))
        params[f"{prefix}.u{g}"] = _uniform_param(rng, hidden_dim, (hidden_dim, hidden_dim))
        params[f"{prefix}.b{g}"] = _zero_param((hidden_dim,))
    return params


def _gate(x, h, w, u, b, kind):
    return ad.activation(ad.add(ad.add(ad.matmul(x, w), ad.matmul(h, u)), b), kind)


def _check_dims(x, state, params, prefix):
    din, dh = params[f"{prefix}.w" + ("i" if f"{prefix}.wi" in params else "z")].data.shape
    if x.data.shape != (1, din):
        raise ShapeError(f"cell input has shape {x.data.shape}, expected (1, {din})")
    if state.h.data.shape != (1, dh):
        raise ShapeError(f"hidden state has shape {state.h.data.shape}, expected (1, {dh})")


def lstm_cell(x, state, params, prefix="rnn"):
    """Standard LSTM gate equations; returns the next RecurrentState."""
    _check_dims(x, state, params, prefix)
    h, c = state.h, state.c
    i = _gate(x, h, params[f"{prefix}.wi"], params[f"{prefix}.ui"], params[f"{prefix}.bi"], "sigmoid")
    f = _gate(x, h, params[f"{prefix}.wf"], params[f"{prefix}.uf"], params[f"{prefix}.bf"], "sigmoid")
    o = _gate(x, h, params[f"{prefix}.wo"], params[f"{prefix}.uo"], params[f"{prefix}.bo"], "sigmoid")
    cand = _gate(x, h, params[f"{prefix}.wc"], params[f"{prefix}.uc"], params[f"{prefix}.bc"], "tanh")
    c_next = ad.add(ad.mul(f, c), ad.mul(i, cand))
    h_next = ad.mul(o, ad.activation(c_next, "tanh"))
    return RecurrentState(h=h_next, c=c_next)


def gru_cell(x, state, params, prefix="rnn"):
    """GRU with a retention-style update gate: z=1 keeps the old state."""
    _check_dims(x, state, params, prefix)
    h = state.h
    z = _gate(x, h, params[f"{prefix}.wz"], params[f"{prefix}.uz"], params[f"{prefix}.bz"], "sigmoid")
    r = _gate(x, h, params[f"{prefix}.wr"], params[f"{prefix}.ur"], params[f"{prefix}.br"], "sigmoid")
    cand = ad.activation(
        ad.add(
            ad.add(ad.matmul(x, params[f"{prefix}.wh"]), ad.matmul(ad.mul(r, h), params[f"{prefix}.uh"])),
            params[f"{prefix}.bh"],
        ),
        "tanh",
    )
    ones = Tensor(np.ones_like(z.data))
    return RecurrentState(h=ad.add(ad.mul(z, h), ad.mul(ad.sub(ones, z), cand)))


def cell_step(x, state, params, kind, prefix="rnn"):
    if kind == "lstm":
        return lstm_cell(x, state, params, prefix)
    if kind == "gru":
        return gru_cell(x, state, params, prefix)
    raise ConfigurationError(f"cell kind must be 'lstm' or 'gru', got {kind!r}")
