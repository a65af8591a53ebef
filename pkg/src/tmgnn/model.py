"""The full temporal model: per-timestep hierarchy, resolution selection,
recurrent backbone, and per-node prediction head.

At each timestep the current graph is expanded into its resolution
hierarchy, the per-level readouts are stacked, attention contracts them
into selection logits, one resolution's readout is chosen and fed to the
recurrent cell, and each node's prediction is read from its bottom-level
latent concatenated with the new hidden state.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .attention import AttentionConfig, init_attention_params, multi_head, select_resolution
from .errors import ConfigurationError, DataError, ParseError
from .mgn import MgnConfig, _uniform_param, _zero_param, build_hierarchy, init_mgn_params
from .recurrent import cell_step, init_recurrent_params, initial_state
from .rng import Rng

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class ModelConfig:
    """All structural hyperparameters of the temporal model."""

    mgn: MgnConfig
    attention: AttentionConfig = field(default_factory=AttentionConfig)
    input_dim: int = 8
    horizon: int = 1
    cell: str = "lstm"
    hidden_dim: int = None
    head_hidden: int = None
    temperature: float = 1.0

    def __post_init__(self):
        if self.cell not in ("lstm", "gru"):
            raise ConfigurationError(f"cell must be 'lstm' or 'gru', got {self.cell!r}")
        if self.input_dim < 1 or self.horizon < 1:
            raise ConfigurationError("input_dim and horizon must be >= 1")
        if self.temperature <= 0:
            raise ConfigurationError(f"temperature must be positive, got {self.temperature}")

    @property
    def resolved_hidden_dim(self):
        return self.hidden_dim if self.hidden_dim is not None else self.mgn.message_dim

    @property
    def resolved_head_hidden(self):
        return self.head_hidden if self.head_hidden is not None else self.mgn.message_dim

    def to_dict(self):
        return {
            "level_sizes": list(self.mgn.level_sizes),
            "message_dim": self.mgn.message_dim,
            "mp_layers": self.mgn.mp_layers,
            "activation": self.mgn.activation,
            "laplacian": self.mgn.laplacian,
            "clustering_layers": self.mgn.clustering_layers,
            "heads": self.attention.heads,
            "key_dim": self.attention.key_dim,
            "value_dim": self.attention.value_dim,
            "contraction": self.attention.contraction,
            "input_dim": self.input_dim,
            "horizon": self.horizon,
            "cell": self.cell,
            "hidden_dim": self.hidden_dim,
            "head_hidden": self.head_hidden,
            "temperature": self.temperature,
        }

    @classmethod
    def from_dict(cls, doc):
        return cls(
            mgn=MgnConfig(
                level_sizes=tuple(doc["level_sizes"]),
                message_dim=doc["message_dim"],
                mp_layers=doc["mp_layers"],
                activation=doc["activation"],
                laplacian=doc["laplacian"],
                clustering_layers=doc["clustering_layers"],
            ),
            attention=AttentionConfig(
                heads=doc["heads"],
                key_dim=doc["key_dim"],
                value_dim=doc["value_dim"],
                contraction=doc["contraction"],
            ),
            input_dim=doc["input_dim"],
            horizon=doc["horizon"],
            cell=doc["cell"],
            hidden_dim=doc["hidden_dim"],
            head_hidden=doc["head_hidden"],
            temperature=doc["temperature"],
        )


@dataclass
class StepResult:
    state: object
    prediction: Tensor
    hierarchy: object
    selection: object


@dataclass
class StepNoise:
    """Frozen Gumbel draws for one timestep (tests and reproducibility)."""

    cluster: list = None
    selection: np.ndarray = None


class TmgnnModel:
    """Owns the parameter tensors and the per-timestep forward pass."""

    def __init__(self, config, seed=0, params=None):
        self.config = config
        if params is not None:
            self.params = params
        else:
            rng = seed if isinstance(seed, Rng) else Rng(seed)
            self.params = self._init_params(rng)

    def _init_params(self, rng):
        cfg = self.config
        dz = cfg.mgn.message_dim
        dh = cfg.resolved_hidden_dim
        hh = cfg.resolved_head_hidden
        params = {}
        params.update(init_mgn_params(cfg.mgn, cfg.input_dim, rng))
        params.update(init_attention_params(cfg.attention, dz, rng))
        params.update(init_recurrent_params(cfg.cell, dz, dh, rng))
        params["head.w1"] = _uniform_param(rng, dz + dh, (dz + dh, hh))
        params["head.b1"] = _zero_param((hh,))
        params["head.w2"] = _uniform_param(rng, hh, (hh, cfg.horizon))
        params["head.b2"] = _zero_param((cfg.horizon,))
        return params

    def initial_state(self):
        return initial_state(self.config.resolved_hidden_dim, self.config.cell)

    def step(self, graph, state, mode="eval", rng=None, noise=None):
        """One timestep: hierarchy, selection, recurrence, per-node head."""
        cfg = self.config
        cluster_noise = noise.cluster if noise is not None else None
        selection_noise = noise.selection if noise is not None else None
        hierarchy = build_hierarchy(
            graph, self.params, cfg.mgn,
            temperature=cfg.temperature, rng=rng, mode=mode, noise=cluster_noise,
        )
        stack = hierarchy.readout_stack()
        mh = multi_head(stack, self.params, cfg.attention)
        selection = select_resolution(
            mh, stack, self.params, cfg.attention,
            temperature=cfg.temperature, rng=rng, mode=mode, noise=selection_noise,
        )
        state = cell_step(selection.vector, state, self.params, cfg.cell)
        z_bottom = hierarchy.latents[0]
        tiled = ad.matmul(Tensor(np.ones((graph.n, 1))), state.h)
        joined = ad.concat([z_bottom, tiled], axis=1)
        hidden = ad.activation(
            ad.add(ad.matmul(joined, self.params["head.w1"]), self.params["head.b1"]),
            cfg.mgn.activation,
        )
        prediction = ad.add(ad.matmul(hidden, self.params["head.w2"]), self.params["head.b2"])
        return StepResult(state=state, prediction=prediction, hierarchy=hierarchy, selection=selection)

    def forward_sequence(self, graphs, mode="eval", rng=None, noises=None, state=None):
        """Roll the model over a chronological sequence of graphs."""
        graphs = list(graphs)
        if not graphs:
            raise DataError("forward_sequence needs at least one graph")
        n = graphs[0].n
        if any(g.n != n for g in graphs):
            raise DataError("all graphs in a sequence must share the node count")
        if state is None:
            state = self.initial_state()
        results = []
        for t, g in enumerate(graphs):
            noise = noises[t] if noises is not None else None
            result = self.step(g, state, mode=mode, rng=rng, noise=noise)
            state = result.state
            results.append(result)
        return results

    def parameter_vector(self):
        return np.concatenate([self.params[k].data.ravel() for k in sorted(self.params)])


def tmgnn_forward(graphs, model, rng=None, mode="eval", noises=None):
    """Prediction at the final timestep plus per-timestep selection records.

    Returns (per-node predictions with shape (n,) for horizon 1 or
    (n, horizon) otherwise, list of (timestep, level_index, probs)).
    """
    results = model.forward_sequence(graphs, mode=mode, rng=rng, noises=noises)
    diagnostics = [(t, r.selection.level_index, r.selection.probs) for t, r in enumerate(results)]
    pred = results[-1].prediction.data.copy()
    if model.config.horizon == 1:
        pred = pred[:, 0]
    return pred, diagnostics


def save_checkpoint(model, path, extra=None):
    """Versioned structured-text checkpoint: name -> shape -> row-major values."""
    doc = {
        "format_version": CHECKPOINT_VERSION,
        "config": model.config.to_dict(),
        "params": {
            name: {
                "shape": list(t.data.shape),
                "values": [float(v) for v in t.data.ravel()],
            }
            for name, t in sorted(model.params.items())
        },
    }
    if extra:
        doc["extra"] = extra
    with open(path, "w") as fh:
        fh.write(json.dumps(doc, indent=1, sort_keys=True))
        fh.write("\n")


def load_checkpoint(path):
    """Restore a model (and any extra payload) from a checkpoint file."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    if doc.get("format_version") != CHECKPOINT_VERSION:
        raise ParseError(
            f"{path}: unsupported checkpoint version {doc.get('format_version')!r}"
        )
    config = ModelConfig.from_dict(doc["config"])
    params = {}
    for name, entry in doc["params"].items():
        arr = np.asarray(entry["values"], dtype=np.float64).reshape(entry["shape"])
        params[name] = Tensor(arr, requires_grad=True)
    model = TmgnnModel(config, params=params)
    return model, doc.get("extra")
