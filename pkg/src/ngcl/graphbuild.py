"""Labeled brain graphs and centrality-guided adaptive augmentation.

Augmentation removes structure only: low-importance nodes are masked
(rows and columns zeroed) and low-importance edge pairs are deleted, with
selection probabilities inversely proportional to min-max-normalized
weighted total degree. Feature matrices and labels are never touched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .biomarkers import NodeFeatureMatrix
from .connectivity import ConnectivityMatrix
from .errors import DataError, ShapeError

#: Floor added to sampling weights so maximal-importance items stay selectable.
WEIGHT_EPS = 1e-6


@dataclass
class BrainGraph:
    """Directed weighted adjacency + node features + binary state label.

    ``adjacency[i, j]`` is the edge weight from node j onto node i.
    """

    adjacency: np.ndarray
    features: NodeFeatureMatrix
    label: int

    def __post_init__(self):
        self.adjacency = np.asarray(self.adjacency, dtype=np.float64)
        n, m = self.adjacency.shape
        if n != m:
            raise ShapeError(f"adjacency must be square, got {self.adjacency.shape}")
        if self.features.n_channels != n:
            raise ShapeError(
                f"adjacency has {n} nodes but features have {self.features.n_channels}"
            )
        if np.any(self.adjacency < 0):
            raise DataError("adjacency weights must be nonnegative")
        if np.any(np.diag(self.adjacency) != 0):
            raise DataError("adjacency diagonal must be zero")
        if self.label not in (0, 1):
            raise DataError(f"graph label must be 0 or 1, got {self.label}")

    @property
    def n_nodes(self) -> int:
        return self.adjacency.shape[0]


@dataclass
class AugmentationPolicy:
    node_mask_ratio: float = 0.2
    edge_perturb_ratio: float = 0.2
    seed: int = 0

    def __post_init__(self):
        for name in ("node_mask_ratio", "edge_perturb_ratio"):
            v = getattr(self, name)
            if not 0 <= v < 1:
                raise ValueError(f"{name} must be in [0, 1), got {v}")


def build_graph(conn: ConnectivityMatrix, feats: NodeFeatureMatrix, label: int) -> BrainGraph:
    """Assemble and validate a BrainGraph from its parts."""
    return BrainGraph(adjacency=conn.weights.copy(), features=feats, label=label)


def degree_centrality(g: BrainGraph) -> np.ndarray:
    """Weighted total degree (in + out) per node."""
    return g.adjacency.sum(axis=0) + g.adjacency.sum(axis=1)


def normalize_importance(c: np.ndarray) -> np.ndarray:
    """Min-max normalize importance scores; all-equal input maps to 0.5."""
    c = np.asarray(c, dtype=np.float64)
    lo, hi = c.min(), c.max()
    if hi == lo:
        return np.full_like(c, 0.5)
    return (c - lo) / (hi - lo)


def _weighted_draw(rng: np.random.Generator, weights: np.ndarray, k: int) -> np.ndarray:
    """Draw k distinct indices, successively, with probability proportional to weights."""
    p = weights / weights.sum()
    return rng.choice(weights.size, size=k, replace=False, p=p)


def mask_nodes(g: BrainGraph, c_norm: np.ndarray, ratio: float, rng: np.random.Generator):
    """Zero rows and columns of ``floor(ratio * N)`` low-importance nodes.

    Sampling weights are ``(1 - c_norm) + eps``, drawn without replacement.
    Node features stay intact (structure-only masking).

    Returns
    -------
    (BrainGraph, np.ndarray)
        The masked copy and the sorted masked-node indices.
    """
    n = g.n_nodes
    k = math.floor(ratio * n)
    if k == 0:
        return BrainGraph(g.adjacency.copy(), g.features, g.label), np.empty(0, dtype=int)
    weights = (1.0 - np.asarray(c_norm, dtype=np.float64)) + WEIGHT_EPS
    masked = np.sort(_weighted_draw(rng, weights, k))
    adj = g.adjacency.copy()
    adj[masked, :] = 0.0
    adj[:, masked] = 0.0
    return BrainGraph(adj, g.features, g.label), masked


def _edge_pairs(adjacency: np.ndarray) -> np.ndarray:
    """Unordered node pairs {i < j} with a nonzero weight in either direction."""
    present = (adjacency > 0) | (adjacency.T > 0)
    iu, ju = np.triu_indices(adjacency.shape[0], k=1)
    keep = present[iu, ju]
    return np.stack([iu[keep], ju[keep]], axis=1)


def perturb_edges(g: BrainGraph, c_norm: np.ndarray, ratio: float, rng: np.random.Generator) -> BrainGraph:
    """Delete both directions of ``floor(ratio * E_pairs)`` low-importance edge pairs.

    Pair importance is the mean of the endpoint importances; selection
    weights are ``(1 - importance) + eps`` over existing pairs.
    """
    pairs = _edge_pairs(g.adjacency)
    k = math.floor(ratio * pairs.shape[0])
    adj = g.adjacency.copy()
    if k == 0:
        return BrainGraph(adj, g.features, g.label)
    c_norm = np.asarray(c_norm, dtype=np.float64)
    importance = (c_norm[pairs[:, 0]] + c_norm[pairs[:, 1]]) / 2.0
    weights = (1.0 - importance) + WEIGHT_EPS
    chosen = _weighted_draw(rng, weights, k)
    for i, j in pairs[chosen]:
        adj[i, j] = 0.0
        adj[j, i] = 0.0
    return BrainGraph(adj, g.features, g.label)


def augment(g: BrainGraph, policy: AugmentationPolicy, rng: np.random.Generator) -> BrainGraph:
    """Adaptive augmentation: centrality-weighted node masking, then edge deletion.

    Centralities are recomputed after masking so the edge step sees the
    post-mask structure. The input graph is never mutated.
    """
    c_norm = normalize_importance(degree_centrality(g))
    masked_graph, _ = mask_nodes(g, c_norm, policy.node_mask_ratio, rng)
    c_norm_post = normalize_importance(degree_centrality(masked_graph))
    return perturb_edges(masked_graph, c_norm_post, policy.edge_perturb_ratio, rng)
