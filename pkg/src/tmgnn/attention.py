"""Self-attention over the per-level readouts and hard resolution selection.

The L per-level readout vectors form an (L, d_z) stack. Scaled
dot-product attention mixes them, heads are concatenated and projected,
and the head dimension is contracted into one logit per resolution.
Training samples a one-hot selection via straight-through
Gumbel-softmax; evaluation takes the argmax. The selected vector is the
one-hot-weighted combination of the readout stack.
"""

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import ConfigurationError
from .mgn import _uniform_param, _zero_param


@dataclass(frozen=True)
class AttentionConfig:
    heads: int = 1
    key_dim: int = None
    value_dim: int = None
    contraction: str = "mean"

    def __post_init__(self):
        if self.heads < 1:
            raise ConfigurationError(f"head count must be >= 1, got {self.heads}")
        if self.contraction not in ("mean", "linear"):
            raise ConfigurationError(
                f"contraction must be 'mean' or 'linear', got {self.contraction!r}"
            )

    def resolved_dims(self, dz):
        dk = self.key_dim if self.key_dim is not None else dz
        dv = self.value_dim if self.value_dim is not None else dz
        return dk, dv


def init_attention_params(cfg, dz, rng, prefix="attn"):
    dk, dv = cfg.resolved_dims(dz)
    params = {}
    for i in range(cfg.heads):
        params[f"{prefix}.h{i}.wq"] = _uniform_param(rng, dz, (dk, dz))
        params[f"{prefix}.h{i}.wk"] = _uniform_param(rng, dz, (dk, dz))
        params[f"{prefix}.h{i}.wv"] = _uniform_param(rng, dz, (dv, dz))
    wide = cfg.heads * dv
    params[f"{prefix}.wo"] = _uniform_param(rng, wide, (wide, wide))
    if cfg.contraction == "mean":
        params[f"{prefix}.cw"] = Tensor(np.ones((1, 1)), requires_grad=True)
    else:
        params[f"{prefix}.cw"] = _uniform_param(rng, wide, (wide, 1))
    params[f"{prefix}.cb"] = _zero_param((1,))
    return params


def self_attention(stack, wq, wk, wv):
    """softmax(Q K^T / sqrt(d_k)) V with a row-wise softmax.

    Returns the (L, d_v) output and the (L, L) attention matrix.
    """
    q = ad.matmul(stack, ad.transpose(wq))
    k = ad.matmul(stack, ad.transpose(wk))
    v = ad.matmul(stack, ad.transpose(wv))
    dk = wq.data.shape[0]
    scores = ad.scale(ad.matmul(q, ad.transpose(k)), 1.0 / np.sqrt(dk))
    attn = ad.softmax_rows(scores)
    return ad.matmul(attn, v), attn


def multi_head(stack, params, cfg, prefix="attn"):
    """Concatenated per-head outputs projected by W_O: (L, heads * d_v)."""
    outs = []
    for i in range(cfg.heads):
        x, _ = self_attention(
            stack,
            params[f"{prefix}.h{i}.wq"],
            params[f"{prefix}.h{i}.wk"],
            params[f"{prefix}.h{i}.wv"],
        )
        outs.append(x)
    joined = outs[0] if len(outs) == 1 else ad.concat(outs, axis=1)
    return ad.matmul(joined, params[f"{prefix}.wo"])


@dataclass
class Selection:
    """Outcome of a resolution choice at one timestep."""

    vector: Tensor
    one_hot: np.ndarray
    probs: np.ndarray
    level_index: int


def resolution_logits(mh_out, params, cfg, prefix="attn"):
    """Contract the head dimension into one logit per resolution: (1, L)."""
    if cfg.contraction == "mean":
        m = ad.reshape(mh_out.mean(axis=1), (1, -1))
        return ad.add(ad.mul(m, params[f"{prefix}.cw"]), params[f"{prefix}.cb"])
    col = ad.matmul(mh_out, params[f"{prefix}.cw"])
    return ad.add(ad.transpose(col), params[f"{prefix}.cb"])


def select_resolution(mh_out, stack, params, cfg, temperature=1.0, rng=None,
                      mode="eval", noise=None, prefix="attn"):
    """Pick exactly one resolution; returns its readout vector as (1, d_z)."""
    logits = resolution_logits(mh_out, params, cfg, prefix)
    n_levels = logits.data.shape[1]
    if mode == "eval":
        idx = int(np.argmax(logits.data[0]))
        one_hot = ad.one_hot_rows([idx], n_levels)
        probs = ad.softmax_rows(Tensor(logits.data)).data[0]
        weights = Tensor(one_hot)
    elif mode in ("train", "soft"):
        if temperature <= 0:
            raise ConfigurationError(f"temperature must be positive, got {temperature}")
        weights = ad.gumbel_softmax(logits, temperature, hard=(mode == "train"),
                                    rng=rng, noise=noise)
        idx = int(np.argmax(weights.data[0]))
        one_hot = ad.one_hot_rows([idx], n_levels)
        probs = weights.data[0].copy()
    else:
        raise ConfigurationError(f"unknown mode {mode!r}; expected train, soft or eval")
    vector = ad.matmul(weights, stack)
    return Selection(vector=vector, one_hot=one_hot[0], probs=probs, level_index=idx)
