"""Node/graph embedding network with an inner-product adjacency decoder.

The node encoder is an MLP over the concatenation of each node's raw
features and one row-normalized propagation of neighbor features (so the
adjacency enters the computation while the trunk stays an MLP). The graph
encoder is an MLP over the mean node embedding. The decoder reconstructs a
symmetric soft adjacency from projected node embeddings.

All parameters are float64; initialization and dropout draw from
generators owned by the module, so runs are bit-reproducible per seed.
"""

from __future__ import annotations

import math

import numpy as np
import torch
from torch import nn

from . import checkpoint
from .errors import DataError, ShapeError

DEFAULT_HIDDEN = 256
DEFAULT_PROJ_DIM = 32
DEFAULT_DROPOUT = 0.2

_DROPOUT_SEED_OFFSET = 0x5EED


def _uniform_linear(fan_in: int, fan_out: int, gen: torch.Generator) -> nn.Linear:
    """Linear layer with U(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and zero bias."""
    layer = nn.Linear(fan_in, fan_out, dtype=torch.float64)
    bound = 1.0 / math.sqrt(fan_in)
    with torch.no_grad():
        layer.weight.copy_(
            (torch.rand(fan_out, fan_in, generator=gen, dtype=torch.float64) * 2 - 1) * bound
        )
        layer.bias.zero_()
    return layer


def _as_tensor(x) -> torch.Tensor:
    if isinstance(x, torch.Tensor):
        return x.to(torch.float64)
    return torch.as_tensor(np.asarray(x, dtype=np.float64))


class GraphEncoder(nn.Module):
    """Two-layer node MLP, two-layer graph MLP, and a decoder projection."""

    def __init__(
        self,
        n_features: int,
        hidden: int = DEFAULT_HIDDEN,
        proj_dim: int = DEFAULT_PROJ_DIM,
        dropout: float = DEFAULT_DROPOUT,
        seed: int = 0,
    ):
        super().__init__()
        if n_features < 1 or hidden < 1 or proj_dim < 1:
            raise ValueError(
                f"n_features, hidden, proj_dim must be >= 1, got "
                f"({n_features}, {hidden}, {proj_dim})"
            )
        self.n_features = n_features
        self.hidden = hidden
        self.proj_dim = proj_dim
        self.dropout_rate = dropout
        self.seed = seed

        gen = torch.Generator().manual_seed(seed)
        self.node_fc1 = _uniform_linear(2 * n_features, hidden, gen)
        self.node_fc2 = _uniform_linear(hidden, hidden, gen)
        self.graph_fc1 = _uniform_linear(hidden, hidden, gen)
        self.graph_fc2 = _uniform_linear(hidden, hidden, gen)
        self.decoder_proj = _uniform_linear(hidden, proj_dim, gen)
        self._dropout_gen = torch.Generator().manual_seed(seed + _DROPOUT_SEED_OFFSET)

    # -- batched cores: leading dimension is the batch of same-size graphs --

    def _dropout(self, h: torch.Tensor, train_mode: bool) -> torch.Tensor:
        if not train_mode or self.dropout_rate <= 0:
            return h
        keep = 1.0 - self.dropout_rate
        mask = (
            torch.rand(h.shape, generator=self._dropout_gen, dtype=torch.float64) < keep
        ).to(torch.float64) / keep
        return h * mask

    def encode_nodes_batch(self, adj: torch.Tensor, feats: torch.Tensor, train_mode: bool = False) -> torch.Tensor:
        """(B, N, N) adjacency + (B, N, F) features -> (B, N, hidden) embeddings."""
        if adj.shape[-1] != adj.shape[-2] or adj.shape[-2] != feats.shape[-2]:
            raise ShapeError(f"adjacency {tuple(adj.shape)} vs features {tuple(feats.shape)}")
        if feats.shape[-1] != self.n_features:
            raise ShapeError(
                f"encoder expects {self.n_features} features, got {feats.shape[-1]}"
            )
        row_sums = adj.sum(dim=-1, keepdim=True)
        propagated = torch.where(row_sums > 0, adj / row_sums.clamp_min(1e-300), torch.zeros_like(adj)) @ feats
        h = torch.cat([feats, propagated], dim=-1)
        h = torch.relu(self.node_fc1(h))
        h = self._dropout(h, train_mode)
        return self.node_fc2(h)

    def encode_graph_batch(self, node_emb: torch.Tensor) -> torch.Tensor:
        """(B, N, hidden) node embeddings -> (B, hidden) graph embeddings."""
        if node_emb.shape[-2] == 0:
            raise DataError("cannot encode an empty graph (0 nodes)")
        pooled = node_emb.mean(dim=-2)
        return self.graph_fc2(torch.relu(self.graph_fc1(pooled)))

    def decode_adjacency_batch(self, node_emb: torch.Tensor) -> torch.Tensor:
        """(B, N, hidden) node embeddings -> (B, N, N) symmetric soft adjacency in (0, 1)."""
        z = self.decoder_proj(node_emb)
        logits = z @ z.transpose(-1, -2) / math.sqrt(self.proj_dim)
        return torch.sigmoid(logits)

    # -- single-graph fronts --

    def encode_nodes(self, adj, feats, train_mode: bool = False) -> torch.Tensor:
        """(N, N) adjacency + (N, F) features -> (N, hidden)."""
        return self.encode_nodes_batch(
            _as_tensor(adj).unsqueeze(0), _as_tensor(feats).unsqueeze(0), train_mode
        ).squeeze(0)

    def encode_graph(self, node_emb) -> torch.Tensor:
        """(N, hidden) node embeddings -> (hidden,) graph embedding."""
        return self.encode_graph_batch(_as_tensor(node_emb).unsqueeze(0)).squeeze(0)

    def decode_adjacency(self, node_emb) -> torch.Tensor:
        """(N, hidden) node embeddings -> (N, N) soft adjacency."""
        return self.decode_adjacency_batch(_as_tensor(node_emb).unsqueeze(0)).squeeze(0)

    # -- persistence --

    def save(self, path) -> None:
        meta = {
            "n_features": self.n_features,
            "hidden": self.hidden,
            "proj_dim": self.proj_dim,
            "dropout": self.dropout_rate,
            "seed": self.seed,
        }
        tensors = {name: p.detach().numpy() for name, p in self.state_dict().items()}
        checkpoint.save_tensors(path, "encoder", meta, tensors)

    @classmethod
    def load(cls, path) -> "GraphEncoder":
        meta, tensors = checkpoint.load_tensors(path, expect_kind="encoder")
        enc = cls(
            n_features=meta["n_features"],
            hidden=meta["hidden"],
            proj_dim=meta["proj_dim"],
            dropout=meta["dropout"],
            seed=meta["seed"],
        )
        enc.load_state_dict({k: torch.as_tensor(v) for k, v in tensors.items()})
        return enc


def init_encoder(n_features: int, hidden: int = DEFAULT_HIDDEN, seed: int = 0, **kwargs) -> GraphEncoder:
    """Fresh deterministic encoder for `n_features`-dimensional node features."""
    return GraphEncoder(n_features=n_features, hidden=hidden, seed=seed, **kwargs)
