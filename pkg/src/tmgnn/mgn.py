"""Per-timestep multiresolution network: encoder, learnable clustering,
pooling, and bottom-up hierarchy construction.

Each level above the top owns an independent (clustering, encoder,
pooling) triple. The encoder runs several rounds of neighbor averaging
followed by a learned linear map and non-linearity. Clustering scores
every node against K channels with a message-passing layer and samples a
hard assignment via straight-through Gumbel-softmax during training;
evaluation uses the deterministic row-wise argmax. Pooling sums member
latents per cluster and passes them through a two-layer perceptron,
zeroing empty clusters so coarse sizes stay fixed.
"""

import json
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import ConfigurationError, ContractError
from .graphs import Graph, Partition, coarsen, normalized_laplacian, partition_from_assignment


@dataclass(frozen=True)
class MgnConfig:
    """Shape of the resolution hierarchy and of the per-level networks.

    level_sizes runs from the input graph down to the coarsest level,
    e.g. (20, 8, 1): the input has 20 nodes, the middle level 8 clusters
    and the top level a single supernode.
    """

    level_sizes: tuple
    message_dim: int = 24
    mp_layers: int = 4
    activation: str = "tanh"
    laplacian: str = "row"
    clustering_layers: int = 1

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.level_sizes)
        object.__setattr__(self, "level_sizes", sizes)
        if not sizes or any(s < 1 for s in sizes):
            raise ConfigurationError(f"level sizes must be positive, got {sizes}")
        if any(a <= b for a, b in zip(sizes, sizes[1:])):
            raise ConfigurationError(
                f"level sizes must strictly decrease toward the top, got {sizes}"
            )
        if self.message_dim < 1 or self.mp_layers < 1 or self.clustering_layers < 1:
            raise ConfigurationError("message_dim, mp_layers and clustering_layers must be >= 1")

    @property
    def levels(self):
        return len(self.level_sizes)


def _uniform_param(rng, fan_in, shape):
    bound = 1.0 / np.sqrt(fan_in)
    return Tensor(rng.uniform(-bound, bound, shape), requires_grad=True)


def _zero_param(shape):
    return Tensor(np.zeros(shape), requires_grad=True)


def init_mgn_params(cfg, in_dim, rng, prefix="mgn"):
    """Fresh parameter dict for every level triple, in a fixed draw order."""
    params = {}
    dz = cfg.message_dim
    levels = cfg.levels

    def encoder(name, d_in):
        params[f"{name}.win"] = _uniform_param(rng, d_in, (d_in, dz))
        for t in range(1, cfg.mp_layers + 1):
            params[f"{name}.w{t}"] = _uniform_param(rng, dz, (dz, dz))
            params[f"{name}.b{t}"] = _zero_param((dz,))

    if levels == 1:
        encoder(f"{prefix}.l1.enc", in_dim)
        return params

    for i in range(levels - 1):
        level = levels - i
        d_in = in_dim if i == 0 else dz
        k_next = cfg.level_sizes[i + 1]
        encoder(f"{prefix}.l{level}.enc", d_in)
        dims = [d_in] + [dz] * (cfg.clustering_layers - 1) + [k_next]
        for j, (a, b) in enumerate(zip(dims, dims[1:])):
            params[f"{prefix}.l{level}.clu.w{j}"] = _uniform_param(rng, a, (a, b))
            params[f"{prefix}.l{level}.clu.b{j}"] = _zero_param((b,))
        params[f"{prefix}.l{level}.pool.w1"] = _uniform_param(rng, dz, (dz, dz))
        params[f"{prefix}.l{level}.pool.b1"] = _zero_param((dz,))
        params[f"{prefix}.l{level}.pool.w2"] = _uniform_param(rng, dz, (dz, dz))
        params[f"{prefix}.l{level}.pool.b2"] = _zero_param((dz,))
    return params


def _propagation(graph, cfg):
    return Tensor(normalized_laplacian(graph, kind=cfg.laplacian))


def encode_features(prop, x, params, name, cfg):
    """T rounds of propagate-transform-activate on top of a linear input map."""
    h = ad.matmul(x, params[f"{name}.win"])
    for t in range(1, cfg.mp_layers + 1):
        h = ad.matmul(prop, h)
        h = ad.matmul(h, params[f"{name}.w{t}"])
        h = ad.add(h, params[f"{name}.b{t}"])
        h = ad.activation(h, cfg.activation)
    return h


def encode(graph, params, cfg, level=None):
    """Node latents for a graph using the encoder of the given level."""
    level = cfg.levels if level is None else level
    prop = _propagation(graph, cfg)
    x = Tensor(graph.features)
    return encode_features(prop, x, params, f"mgn.l{level}.enc", cfg)


def cluster_logits(prop, x, params, name, cfg):
    """Message-passing network scoring each node against K channels."""
    h = x
    for j in range(cfg.clustering_layers):
        h = ad.matmul(prop, h)
        h = ad.matmul(h, params[f"{name}.w{j}"])
        h = ad.add(h, params[f"{name}.b{j}"])
        if j < cfg.clustering_layers - 1:
            h = ad.activation(h, cfg.activation)
    return h


def sample_assignment(logits, k, temperature, rng, mode, noise=None):
    """Assignment tensor plus hard Partition for the three run modes.

    train: straight-through Gumbel-softmax (hard forward, soft gradient).
    soft:  differentiable soft sample (finite-difference friendly).
    eval:  deterministic argmax with lowest-index tie-break, no noise.
    """
    if k <= 0:
        raise ConfigurationError(f"cluster count must be positive, got {k}")
    if mode == "eval":
        part = partition_from_assignment(logits.data)
        pi = Tensor(ad.one_hot_rows(part.assignments, k))
        probs = ad.softmax_rows(Tensor(logits.data)).data
        return pi, part, probs
    if mode == "train":
        pi = ad.gumbel_softmax(logits, temperature, hard=True, rng=rng, noise=noise)
        part = partition_from_assignment(pi.data)
        return pi, part, pi.data
    if mode == "soft":
        pi = ad.gumbel_softmax(logits, temperature, hard=False, rng=rng, noise=noise)
        part = partition_from_assignment(pi.data)
        return pi, part, pi.data
    raise ConfigurationError(f"unknown mode {mode!r}; expected train, soft or eval")


def cluster(graph, params, cfg, level=None, temperature=1.0, rng=None, mode="eval", noise=None):
    """Partition a graph with the clustering network of the given level."""
    level = cfg.levels if level is None else level
    i = cfg.levels - level
    k = cfg.level_sizes[i + 1]
    prop = _propagation(graph, cfg)
    logits = cluster_logits(prop, Tensor(graph.features), params, f"mgn.l{level}.clu", cfg)
    pi, part, probs = sample_assignment(logits, k, temperature, rng, mode, noise)
    return part, pi, probs


def pool(z, pi, partition, params, name, cfg):
    """Sum member latents per cluster, then a two-layer perceptron.

    Empty clusters come out as exact zero vectors regardless of biases.
    """
    summed = ad.matmul(ad.transpose(pi), z)
    h = ad.activation(ad.add(ad.matmul(summed, params[f"{name}.w1"]), params[f"{name}.b1"]), cfg.activation)
    out = ad.add(ad.matmul(h, params[f"{name}.w2"]), params[f"{name}.b2"])
    mask = (partition.cluster_sizes() > 0).astype(np.float64)[:, None]
    return ad.mul(out, Tensor(mask))


@dataclass
class ResolutionHierarchy:
    """Per-level graphs, latents and partitions, ordered bottom to top.

    graphs[0] is the input graph; latents[i] are the node latents of the
    level with graphs[i]; partitions[i] maps level i's nodes into the
    clusters forming level i+1.
    """

    graphs: list
    latents: list
    partitions: list
    assignments: list

    @property
    def levels(self):
        return len(self.graphs)

    def level_sizes(self):
        return tuple(g.n for g in self.graphs)

    def readout_stack(self):
        """(L, d_z) matrix of per-level readouts, coarsest level first."""
        rows = [ad.reshape(readout(z), (1, -1)) for z in reversed(self.latents)]
        return ad.concat(rows, axis=0)

    def to_dict(self):
        doc = {"levels": []}
        for i, g in enumerate(self.graphs):
            entry = {
                "nodes": g.n,
                "adjacency": [[float(v) for v in row] for row in g.adjacency],
            }
            if i < len(self.partitions):
                entry["partition"] = [int(c) + 1 for c in self.partitions[i].assignments]
            doc["levels"].append(entry)
        return doc

    def dump(self):
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)


def build_hierarchy(graph, params, cfg, temperature=1.0, rng=None, mode="eval", noise=None):
    """Iterate encode -> cluster -> coarsen -> pool from the input graph up.

    ``noise`` optionally freezes the per-level Gumbel draws: a list with
    one (n_level, K) array per coarsening step.
    """
    if graph.n != cfg.level_sizes[0]:
        raise ConfigurationError(
            f"graph has {graph.n} nodes but the configured input level has "
            f"{cfg.level_sizes[0]}"
        )
    graphs = [graph]
    latents = []
    partitions = []
    assignments = []
    x = Tensor(graph.features)
    if cfg.levels == 1:
        prop = _propagation(graph, cfg)
        latents.append(encode_features(prop, x, params, "mgn.l1.enc", cfg))
        return ResolutionHierarchy(graphs, latents, partitions, assignments)

    for i in range(cfg.levels - 1):
        level = cfg.levels - i
        g = graphs[i]
        k = cfg.level_sizes[i + 1]
        prop = _propagation(g, cfg)
        z = encode_features(prop, x, params, f"mgn.l{level}.enc", cfg)
        latents.append(z)
        logits = cluster_logits(prop, x, params, f"mgn.l{level}.clu", cfg)
        step_noise = noise[i] if noise is not None else None
        pi, part, _ = sample_assignment(logits, k, temperature, rng, mode, step_noise)
        partitions.append(part)
        assignments.append(pi)
        pooled = pool(z, pi, part, params, f"mgn.l{level}.pool", cfg)
        coarse = coarsen(g, part, feature_mode="none")
        graphs.append(Graph(adjacency=coarse.adjacency, features=pooled.data.copy(), labels=coarse.labels))
        x = pooled
    latents.append(x)
    return ResolutionHierarchy(graphs, latents, partitions, assignments)


def readout(z):
    """Column-wise mean over nodes; permutation invariant by construction."""
    if z.data.ndim != 2 or z.data.shape[0] == 0:
        raise ContractError(f"readout needs a non-empty 2-D latent, got {z.data.shape}")
    return z.mean(axis=0)


def init_regression_head(cfg, rng, prefix="mgnhead"):
    dz = cfg.message_dim
    width = cfg.levels * dz
    return {
        f"{prefix}.w1": _uniform_param(rng, width, (width, dz)),
        f"{prefix}.b1": _zero_param((dz,)),
        f"{prefix}.w2": _uniform_param(rng, dz, (dz, 1)),
        f"{prefix}.b2": _zero_param((1,)),
    }


def mgn_regression_loss(hierarchy, y, head_params, cfg, prefix="mgnhead"):
    """Squared error of the perceptron over concatenated level readouts."""
    parts = [ad.reshape(readout(z), (1, -1)) for z in reversed(hierarchy.latents)]
    r = ad.concat(parts, axis=1)
    h = ad.activation(ad.add(ad.matmul(r, head_params[f"{prefix}.w1"]), head_params[f"{prefix}.b1"]), cfg.activation)
    pred = ad.add(ad.matmul(h, head_params[f"{prefix}.w2"]), head_params[f"{prefix}.b2"])
    diff = ad.sub(pred, Tensor(np.full((1, 1), float(y))))
    return ad.tensor_sum(ad.mul(diff, diff))
