import numpy as np
import pytest

from ngcl.biomarkers import NodeFeatureMatrix
from ngcl.graphbuild import BrainGraph


def make_graph(adj, label=0, rng=None):
    """BrainGraph with random-in-[0,1] features matching the adjacency size."""
    adj = np.asarray(adj, dtype=float)
    n = adj.shape[0]
    rng = rng or np.random.default_rng(0)
    feats = NodeFeatureMatrix(rng.uniform(0.0, 1.0, size=(n, 5)))
    return BrainGraph(adjacency=adj, features=feats, label=label)


def random_graph(n, density=0.4, label=0, seed=0):
    """Random nonnegative directed graph with zero diagonal."""
    rng = np.random.default_rng(seed)
    adj = rng.uniform(0.2, 1.0, size=(n, n)) * (rng.random((n, n)) < density)
    np.fill_diagonal(adj, 0.0)
    return make_graph(adj, label=label, rng=rng)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
