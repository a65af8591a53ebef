"""Graph data model, partitions, coarsening and propagation matrices.

A Graph is an undirected weighted adjacency plus a node-feature matrix.
Coarsening collapses the clusters of a Partition into supernodes: the
diagonal of the coarse adjacency carries half the within-cluster edge
mass (so it counts undirected edges once), the off-diagonal carries the
full between-cluster mass. The quadratic form Pi^T A Pi is kept as an
independent cross-check whose diagonal is exactly twice the coarse one.
"""

import json
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DataError, DegenerateGraphError, ParseError, ShapeError
from .validation import check_finite, check_nonnegative, check_partition, check_square, check_symmetric


@dataclass
class Graph:
    """Undirected weighted graph with per-node features.

    adjacency: (n, n) symmetric non-negative weights; diagonal entries are
        self-loop weights (coarse graphs carry their within-cluster mass there).
    features: (n, d) float matrix, one row per node.
    labels: optional node identifiers, one per node.
    """

    adjacency: np.ndarray
    features: np.ndarray
    labels: list = None

    def __post_init__(self):
        self.adjacency = check_square("adjacency", self.adjacency)
        check_symmetric("adjacency", self.adjacency)
        check_nonnegative("adjacency", self.adjacency)
        check_finite("adjacency", self.adjacency)
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.ndim == 1:
            self.features = self.features[:, None]
        if self.features.shape[0] != self.adjacency.shape[0]:
            raise ShapeError(
                f"features have {self.features.shape[0]} rows for "
                f"{self.adjacency.shape[0]} nodes"
            )
        check_finite("features", self.features)
        if self.labels is not None and len(self.labels) != self.adjacency.shape[0]:
            raise ShapeError("labels length does not match node count")

    @property
    def n(self):
        return self.adjacency.shape[0]

    @property
    def degrees(self):
        return self.adjacency.sum(axis=1)


@dataclass
class Partition:
    """Mapping of n nodes into k clusters; empty clusters are allowed."""

    k: int
    assignments: np.ndarray

    def __post_init__(self):
        if self.k <= 0:
            raise ContractError(f"cluster count must be positive, got {self.k}")
        self.assignments = np.asarray(self.assignments, dtype=np.int64)
        check_partition(self.assignments, self.assignments.shape[0], self.k)

    @property
    def n(self):
        return self.assignments.shape[0]

    def cluster_sizes(self):
        return np.bincount(self.assignments, minlength=self.k)

    def members(self, cluster):
        return np.flatnonzero(self.assignments == cluster)


def assignment_matrix(partition):
    """One-hot (n, k) matrix with row i hot at the cluster of node i."""
    out = np.zeros((partition.n, partition.k), dtype=np.float64)
    out[np.arange(partition.n), partition.assignments] = 1.0
    return out


def partition_from_assignment(matrix):
    """Recover the Partition from one-hot (or soft) assignment rows."""
    matrix = np.asarray(matrix, dtype=np.float64)
    return Partition(k=matrix.shape[1], assignments=matrix.argmax(axis=1))


def quadratic_coarsen(graph, pi):
    """Pi^T A Pi for a (possibly soft) assignment matrix Pi."""
    pi = np.asarray(pi, dtype=np.float64)
    if pi.ndim != 2 or pi.shape[0] != graph.n:
        raise ContractError(
            f"assignment matrix has shape {pi.shape} for {graph.n} nodes"
        )
    return pi.T @ graph.adjacency @ pi


def coarsen(graph, partition, feature_mode="sum"):
    """Collapse each cluster into a supernode.

    The coarse diagonal is half the quadratic form's diagonal (within-mass
    counted once per undirected edge); the off-diagonal is the full
    between-cluster mass. Empty clusters stay as isolated supernodes so
    the coarse size always equals partition.k. Coarse features are
    cluster sums of node features unless the caller supplies its own.
    """
    if partition.n != graph.n:
        raise ContractError(
            f"partition covers {partition.n} nodes but graph has {graph.n}"
        )
    pi = assignment_matrix(partition)
    quad = pi.T @ graph.adjacency @ pi
    coarse = quad.copy()
    np.fill_diagonal(coarse, 0.5 * np.diag(quad))
    if feature_mode == "sum":
        features = pi.T @ graph.features
    elif feature_mode == "none":
        features = np.zeros((partition.k, 1))
    else:
        raise ContractError(f"unknown feature_mode {feature_mode!r}")
    labels = [f"c{j}" for j in range(partition.k)]
    return Graph(adjacency=coarse, features=features, labels=labels)


def normalized_laplacian(graph, kind="row", isolated="self-loop"):
    """Propagation matrix used by message passing.

    kind="row" gives D^-1 A (row-stochastic neighbor averaging);
    kind="symmetric" gives I - D^-1/2 A D^-1/2. Degree-zero nodes get an
    implicit unit self-loop before normalization, unless isolated="error".
    """
    a = graph.adjacency
    deg = a.sum(axis=1)
    if np.any(deg == 0):
        if isolated == "error":
            idx = int(np.flatnonzero(deg == 0)[0])
            raise DegenerateGraphError(
                f"node {idx} has zero degree and no self-loop fallback"
            )
        a = a + np.diag((deg == 0).astype(np.float64))
        deg = a.sum(axis=1)
    if kind == "row":
        return a / deg[:, None]
    if kind == "symmetric":
        d_inv_sqrt = 1.0 / np.sqrt(deg)
        return np.eye(graph.n) - (a * d_inv_sqrt[:, None]) * d_inv_sqrt[None, :]
    raise ContractError(f"unknown laplacian kind {kind!r}")


def permute_graph(graph, perm):
    """Relabel nodes so that new node i is old node perm[i]."""
    perm = np.asarray(perm, dtype=np.int64)
    if sorted(perm.tolist()) != list(range(graph.n)):
        raise ContractError(f"perm must be a bijection on 0..{graph.n - 1}")
    labels = None
    if graph.labels is not None:
        labels = [graph.labels[i] for i in perm]
    return Graph(
        adjacency=graph.adjacency[np.ix_(perm, perm)].copy(),
        features=graph.features[perm].copy(),
        labels=labels,
    )


def graph_to_dict(graph):
    n = graph.n
    edges = []
    for i in range(n):
        for j in range(i, n):
            w = graph.adjacency[i, j]
            if w != 0.0:
                edges.append([i + 1, j + 1, float(w)])
    return {
        "n": n,
        "edges": edges,
        "node_labels": list(graph.labels) if graph.labels is not None else None,
        "features": [[float(v) for v in row] for row in graph.features],
    }


def graph_from_dict(doc, where="graph document"):
    try:
        n = int(doc["n"])
        adjacency = np.zeros((n, n), dtype=np.float64)
        for entry in doc["edges"]:
            i, j, w = int(entry[0]) - 1, int(entry[1]) - 1, float(entry[2])
            if not (0 <= i < n and 0 <= j < n):
                raise DataError(f"{where}: edge endpoint out of range in {entry}")
            adjacency[i, j] = w
            adjacency[j, i] = w
        features = np.asarray(doc["features"], dtype=np.float64)
        labels = doc.get("node_labels")
    except (KeyError, TypeError, IndexError, ValueError) as exc:
        raise ParseError(f"{where}: {exc}") from exc
    return Graph(adjacency=adjacency, features=features, labels=labels)


def _dump_json(doc, path):
    text = json.dumps(doc, indent=1, sort_keys=True)
    with open(path, "w") as fh:
        fh.write(text)
        fh.write("\n")


def save_graph(graph, path):
    _dump_json(graph_to_dict(graph), path)


def load_graph(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    return graph_from_dict(doc, where=str(path))
