"""Top-k localized multi-head graph attention classifier.

Attention candidates of a node are its symmetrized-adjacency neighbors plus
itself. Per head, scores outside the k best candidates are masked to -inf
before the softmax so pruned neighbors receive exactly zero weight
(``k = max(1, round(neighbor_rate * N))``). Two layers, concatenated heads,
mean pooling over nodes, and a linear logit head trained with binary
cross-entropy. The pretrained encoder that feeds it stays frozen unless
explicitly released.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import torch
from torch import nn

from . import checkpoint
from .encoder import GraphEncoder, _as_tensor
from .errors import DataError, ShapeError
from .graphbuild import BrainGraph

logger = logging.getLogger("ngcl")

LEAKY_SLOPE = 0.2


@dataclass
class GatConfig:
    layers: int = 2
    heads: int = 4
    embed: int = 16
    neighbor_rate: float = 0.5
    lr: float = 1e-3
    weight_decay: float = 1e-4
    batch_size: int = 128
    epochs: int = 50
    finetune_encoder: bool = False

    def __post_init__(self):
        if self.layers < 1 or self.heads < 1 or self.embed < 1:
            raise ValueError("layers, heads, embed must all be >= 1")
        if not 0 <= self.neighbor_rate <= 1:
            raise ValueError(f"neighbor_rate must be in [0, 1], got {self.neighbor_rate}")


@dataclass
class AttentionMap:
    """Per-layer, per-head row-stochastic attention matrices for one graph."""

    weights: list  # list over layers of (heads, N, N) arrays

    def iter_records(self):
        """Yield ``(layer, head, src, dst, weight)`` for every nonzero entry.

        ``src`` is the attending node (row), ``dst`` the attended neighbor.
        """
        for layer, mat in enumerate(self.weights):
            heads, n, _ = mat.shape
            for head in range(heads):
                rows, cols = np.nonzero(mat[head])
                for i, j in zip(rows, cols):
                    yield layer, head, int(i), int(j), float(mat[head, i, j])


def neighbor_count(neighbor_rate: float, n_nodes: int) -> int:
    """Survivors per attention row: max(1, round(neighbor_rate * N))."""
    return max(1, int(round(neighbor_rate * n_nodes)))


def topk_mask(scores, k: int):
    """Keep the k largest scores, set the rest to -inf.

    Ties at the k-th value are broken toward the lowest index; with fewer
    than k finite candidates everything finite is kept.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    t = scores if isinstance(scores, torch.Tensor) else torch.as_tensor(
        np.asarray(scores, dtype=np.float64)
    )
    _, order = torch.sort(t, dim=-1, descending=True, stable=True)
    ranks = torch.empty_like(order)
    ranks.scatter_(-1, order, torch.arange(t.shape[-1]).expand_as(order))
    kept = (ranks < k) & torch.isfinite(t)
    out = torch.where(kept, t, torch.full_like(t, float("-inf")))
    return out if isinstance(scores, torch.Tensor) else out.numpy()


class TopKGat(nn.Module):
    """Stack of top-k multi-head attention layers with a logistic readout."""

    def __init__(
        self,
        in_dim: int,
        layers: int = 2,
        heads: int = 4,
        embed: int = 16,
        neighbor_rate: float = 0.5,
        seed: int = 0,
    ):
        super().__init__()
        self.in_dim = in_dim
        self.n_layers = layers
        self.heads = heads
        self.embed = embed
        self.neighbor_rate = neighbor_rate
        self.seed = seed

        gen = torch.Generator().manual_seed(seed)

        def uniform(shape, fan_in):
            bound = 1.0 / math.sqrt(fan_in)
            return nn.Parameter(
                (torch.rand(*shape, generator=gen, dtype=torch.float64) * 2 - 1) * bound
            )

        self.w = nn.ParameterList()
        self.a_src = nn.ParameterList()
        self.a_dst = nn.ParameterList()
        d_in = in_dim
        for _ in range(layers):
            self.w.append(uniform((heads, d_in, embed), d_in))
            self.a_src.append(uniform((heads, embed), 2 * embed))
            self.a_dst.append(uniform((heads, embed), 2 * embed))
            d_in = heads * embed
        self.out_weight = uniform((heads * embed,), heads * embed)
        self.out_bias = nn.Parameter(torch.zeros((), dtype=torch.float64))

    def _layer(self, h: torch.Tensor, candidates: torch.Tensor, layer: int):
        """One attention layer on (B, N, d) given a (B, N, N) candidate mask."""
        wh = torch.einsum("bnd,hde->bhne", h, self.w[layer])
        s_src = torch.einsum("bhne,he->bhn", wh, self.a_src[layer])
        s_dst = torch.einsum("bhne,he->bhn", wh, self.a_dst[layer])
        scores = nn.functional.leaky_relu(
            s_src.unsqueeze(-1) + s_dst.unsqueeze(-2), LEAKY_SLOPE
        )
        neg_inf = torch.full_like(scores, float("-inf"))
        scores = torch.where(candidates.unsqueeze(1), scores, neg_inf)
        scores = topk_mask(scores, neighbor_count(self.neighbor_rate, h.shape[-2]))
        alpha = torch.softmax(scores, dim=-1)
        aggregated = alpha @ wh  # (B, heads, N, embed)
        stacked = aggregated.permute(0, 2, 1, 3).reshape(h.shape[0], h.shape[1], -1)
        return stacked, alpha

    def forward_nodes(self, node_emb: torch.Tensor, adj: torch.Tensor, collect_attention: bool = False):
        """(B, N, in_dim) embeddings + (B, N, N) adjacency -> (B, N, heads*embed)."""
        if node_emb.shape[-1] != self.in_dim:
            raise ShapeError(f"classifier expects {self.in_dim}-dim inputs, got {node_emb.shape[-1]}")
        if adj.shape[-2:] != (node_emb.shape[-2], node_emb.shape[-2]):
            raise ShapeError(f"adjacency {tuple(adj.shape)} does not match {node_emb.shape[-2]} nodes")
        eye = torch.eye(adj.shape[-1], dtype=torch.bool).expand(adj.shape[0], -1, -1)
        candidates = (adj > 0) | (adj.transpose(-1, -2) > 0) | eye
        h = node_emb
        maps = []
        for layer in range(self.n_layers):
            h, alpha = self._layer(h, candidates, layer)
            if collect_attention:
                maps.append(alpha)
            if layer < self.n_layers - 1:
                h = nn.functional.elu(h)
        return (h, maps) if collect_attention else h

    def logits(self, node_emb: torch.Tensor, adj: torch.Tensor) -> torch.Tensor:
        """(B,) classification logits via mean pooling over nodes."""
        h = self.forward_nodes(node_emb, adj)
        return h.mean(dim=-2) @ self.out_weight + self.out_bias

    def save(self, path) -> None:
        meta = {
            "in_dim": self.in_dim,
            "layers": self.n_layers,
            "heads": self.heads,
            "embed": self.embed,
            "neighbor_rate": self.neighbor_rate,
            "seed": self.seed,
        }
        tensors = {name: p.detach().numpy() for name, p in self.state_dict().items()}
        checkpoint.save_tensors(path, "gat", meta, tensors)

    @classmethod
    def load(cls, path) -> "TopKGat":
        meta, tensors = checkpoint.load_tensors(path, expect_kind="gat")
        gat = cls(
            in_dim=meta["in_dim"],
            layers=meta["layers"],
            heads=meta["heads"],
            embed=meta["embed"],
            neighbor_rate=meta["neighbor_rate"],
            seed=meta["seed"],
        )
        gat.load_state_dict({k: torch.as_tensor(v) for k, v in tensors.items()})
        return gat


def predict(g: BrainGraph, enc: GraphEncoder, gat: TopKGat):
    """Seizure probability and the attention map for one graph (eval mode)."""
    with torch.no_grad():
        node_emb = enc.encode_nodes_batch(
            _as_tensor(g.adjacency).unsqueeze(0),
            _as_tensor(g.features.values).unsqueeze(0),
            train_mode=False,
        )
        h, maps = gat.forward_nodes(node_emb, _as_tensor(g.adjacency).unsqueeze(0), collect_attention=True)
        logit = h.mean(dim=-2) @ gat.out_weight + gat.out_bias
        prob = torch.sigmoid(logit).item()
    return prob, AttentionMap([m.squeeze(0).numpy() for m in maps])


def predict_batch(graphs, enc: GraphEncoder, gat: TopKGat) -> np.ndarray:
    """Seizure probabilities for a list of graphs (eval mode)."""
    probs = np.empty(len(graphs))
    with torch.no_grad():
        for group in _group_by_nodes(range(len(graphs)), graphs):
            adj = torch.as_tensor(np.stack([graphs[i].adjacency for i in group]))
            feats = torch.as_tensor(np.stack([graphs[i].features.values for i in group]))
            node_emb = enc.encode_nodes_batch(adj, feats, train_mode=False)
            p = torch.sigmoid(gat.logits(node_emb, adj)).numpy()
            probs[np.asarray(group)] = p
    return probs


def _group_by_nodes(indices, graphs):
    """Split graph indices into same-node-count groups, preserving order."""
    groups = {}
    for i in indices:
        groups.setdefault(graphs[i].n_nodes, []).append(int(i))
    return [groups[n] for n in sorted(groups)]


def finetune(
    train_graphs,
    enc: GraphEncoder,
    cfg: GatConfig = None,
    seed: int = 0,
    gat: TopKGat = None,
):
    """Train the classifier with binary cross-entropy on labeled graphs.

    The encoder runs in eval mode and is not updated unless
    ``cfg.finetune_encoder`` is set.

    Returns
    -------
    (TopKGat, list)
        The trained classifier and per-epoch mean BCE values.
    """
    cfg = cfg or GatConfig()
    labels_all = np.array([g.label for g in train_graphs])
    if len(set(labels_all.tolist())) < 2:
        raise DataError("fine-tuning needs both classes in the training set")
    if gat is None:
        gat = TopKGat(
            in_dim=enc.hidden,
            layers=cfg.layers,
            heads=cfg.heads,
            embed=cfg.embed,
            neighbor_rate=cfg.neighbor_rate,
            seed=seed,
        )
    params = list(gat.parameters())
    if cfg.finetune_encoder:
        params += list(enc.parameters())
    optimizer = torch.optim.Adam(params, lr=cfg.lr, weight_decay=cfg.weight_decay)

    epoch_means = []
    for epoch in range(cfg.epochs):
        order = np.random.default_rng([seed, epoch]).permutation(len(train_graphs))
        batch_losses = []
        for start in range(0, len(order), cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            logits = torch.empty(len(idx), dtype=torch.float64)
            pieces = []
            for group in _group_by_nodes(range(len(idx)), [train_graphs[i] for i in idx]):
                adj = torch.as_tensor(np.stack([train_graphs[idx[i]].adjacency for i in group]))
                feats = torch.as_tensor(
                    np.stack([train_graphs[idx[i]].features.values for i in group])
                )
                if cfg.finetune_encoder:
                    node_emb = enc.encode_nodes_batch(adj, feats, train_mode=True)
                else:
                    with torch.no_grad():
                        node_emb = enc.encode_nodes_batch(adj, feats, train_mode=False)
                pieces.append((group, gat.logits(node_emb, adj)))
            logits = torch.cat([p for _, p in pieces])
            positions = torch.as_tensor(np.concatenate([g for g, _ in pieces]))
            targets = torch.as_tensor(labels_all[idx][positions.numpy()], dtype=torch.float64)
            loss = nn.functional.binary_cross_entropy_with_logits(logits, targets)
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            batch_losses.append(loss.item())
        epoch_means.append(float(np.mean(batch_losses)) if batch_losses else float("nan"))
    return gat, epoch_means
