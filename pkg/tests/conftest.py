import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tmgnn.graphs import Graph


def random_graph(gen, n=None, d_feat=3, weighted=False):
    """Random connected-ish undirected graph with features."""
    if n is None:
        n = int(gen.integers(2, 13))
    a = gen.random((n, n))
    adj = ((a + a.T) > 1.0).astype(np.float64)
    np.fill_diagonal(adj, 0.0)
    # keep a path so no node is isolated
    for i in range(n - 1):
        adj[i, i + 1] = adj[i + 1, i] = 1.0
    if weighted:
        w = gen.random((n, n)) + 0.5
        adj = adj * (w + w.T) / 2.0
    feats = gen.standard_normal((n, d_feat))
    return Graph(adjacency=adj, features=feats)


@pytest.fixture
def gen():
    return np.random.default_rng(12345)
