"""Synthetic two-class graph generator for end-to-end verification.

Interictal graphs concentrate strong directed edges into a fixed
seizure-onset subset of nodes (suppression-like inward flow); ictal graphs
are densely and bidirectionally connected (propagation-like spread). Both
classes receive spurious noise edges scaled by the noise level, and both
elevate the spike/HFO feature columns of the onset nodes.
"""

from __future__ import annotations

import numpy as np

from ..biomarkers import NodeFeatureMatrix
from ..errors import DataError
from ..graphbuild import BrainGraph

SOZ_IN_WEIGHT = (0.8, 1.2)
ICTAL_PAIR_PROB = 0.85
ICTAL_WEIGHT = (0.5, 0.9)
NOISE_WEIGHT = (0.5, 1.5)


def _noise_layer(rng: np.random.Generator, n: int, noise: float) -> np.ndarray:
    prob = min(0.6, 0.15 + 0.3 * noise)
    mask = rng.random((n, n)) < prob
    return mask * (noise * rng.uniform(*NOISE_WEIGHT, size=(n, n)))


def _features(rng: np.random.Generator, n: int, soz: np.ndarray) -> np.ndarray:
    x = rng.uniform(0.1, 0.4, size=(n, 5))
    x[soz, 0] += rng.uniform(0.4, 0.6, size=soz.size)
    x[soz, 1] += rng.uniform(0.3, 0.5, size=soz.size)
    return np.clip(x, 0.0, 1.0)


def synth_graph_dataset(
    n_per_class: int = 100,
    n_nodes: int = 20,
    soz_size: int = 4,
    noise: float = 0.3,
    seed: int = 0,
) -> list:
    """Balanced labeled BrainGraph list, deterministic per seed.

    With ``noise=0`` the classes are separable by mean degree alone: ictal
    graphs carry far more total edge weight than interictal ones in every
    instance.
    """
    if not 1 <= soz_size < n_nodes:
        raise DataError(f"need 1 <= soz_size < n_nodes, got ({soz_size}, {n_nodes})")
    if n_per_class < 1:
        raise DataError(f"n_per_class must be >= 1, got {n_per_class}")
    rng = np.random.default_rng(seed)
    soz = np.arange(soz_size)
    non_soz = np.arange(soz_size, n_nodes)
    graphs = []
    for _ in range(n_per_class):
        # interictal: inward flow into the onset subset
        adj = np.zeros((n_nodes, n_nodes))
        for dst in soz:
            adj[dst, non_soz] = rng.uniform(*SOZ_IN_WEIGHT, size=non_soz.size)
        adj += _noise_layer(rng, n_nodes, noise)
        np.fill_diagonal(adj, 0.0)
        graphs.append(BrainGraph(adj, NodeFeatureMatrix(_features(rng, n_nodes, soz)), 0))

        # ictal: dense bidirectional spread
        adj = np.zeros((n_nodes, n_nodes))
        iu, ju = np.triu_indices(n_nodes, k=1)
        chosen = rng.random(iu.size) < ICTAL_PAIR_PROB
        adj[iu[chosen], ju[chosen]] = rng.uniform(*ICTAL_WEIGHT, size=int(chosen.sum()))
        adj[ju[chosen], iu[chosen]] = rng.uniform(*ICTAL_WEIGHT, size=int(chosen.sum()))
        adj += _noise_layer(rng, n_nodes, noise)
        np.fill_diagonal(adj, 0.0)
        graphs.append(BrainGraph(adj, NodeFeatureMatrix(_features(rng, n_nodes, soz)), 1))
    return graphs
