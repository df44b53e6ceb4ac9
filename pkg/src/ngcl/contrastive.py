"""Spectral/embedding similarities, the two contrastive losses, and pretraining.

The graph-level loss contrasts class-mates against the rest of the batch
under a blended similarity: an RBF kernel on normalized-Laplacian spectra
of the decoded adjacencies (global structure) mixed with cosine similarity
of graph embeddings (local semantics). The node-graph loss pulls each node
embedding toward its own graph embedding against the other graphs in the
batch. Gradients do not flow through the eigen-decomposition: the spectral
similarity enters the objective as a constant weight.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import torch

from .encoder import GraphEncoder, init_encoder
from .errors import (
    DataError,
    DegenerateBatchError,
    NumericError,
    TrainingError,
)
from .graphbuild import AugmentationPolicy, BrainGraph, augment

logger = logging.getLogger("ngcl")

SPECTRUM_TOL = 1e-9
DEGREE_FLOOR = 1e-8
SIGMA_FLOOR = 1e-6


@dataclass
class SpectralSignature:
    """Ascending normalized-Laplacian eigenvalues of one graph."""

    eigenvalues: np.ndarray

    def __post_init__(self):
        self.eigenvalues = np.asarray(self.eigenvalues, dtype=np.float64)
        if self.eigenvalues.ndim != 1:
            raise ValueError("spectral signature must be a 1-D eigenvalue vector")
        lo, hi = self.eigenvalues.min(), self.eigenvalues.max()
        if lo < -SPECTRUM_TOL or hi > 2 + SPECTRUM_TOL:
            raise NumericError(
                f"eigenvalues [{lo:.3e}, {hi:.3e}] outside the normalized-Laplacian range"
            )


@dataclass
class PretrainConfig:
    epochs: int = 50
    batch_size: int = 128
    lr: float = 1e-3
    weight_decay: float = 0.0
    tau: float = 0.3
    gamma: float = 0.5
    alpha: float = 1.0
    sigma_mode: str = "median"
    sigma_value: float = 1.0
    hidden: int = 256
    proj_dim: int = 32
    dropout: float = 0.2

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if not 0 <= self.gamma <= 1:
            raise ValueError(f"gamma must be in [0, 1], got {self.gamma}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.sigma_mode not in ("median", "fixed"):
            raise ValueError(f"sigma_mode must be 'median' or 'fixed', got {self.sigma_mode!r}")


@dataclass
class LossTrace:
    """Per-batch loss records plus per-epoch mean totals."""

    records: list = field(default_factory=list)  # (epoch, batch, l_graph, l_info, l_total)
    epoch_means: list = field(default_factory=list)


def _normalized_laplacian(m: np.ndarray) -> np.ndarray:
    """I - D^{-1/2} M D^{-1/2} for symmetrized, zero-diagonal M; stacked (..., N, N) ok."""
    sym = (m + np.swapaxes(m, -1, -2)) / 2.0
    n = sym.shape[-1]
    eye = np.eye(n, dtype=bool)
    sym = np.where(eye, 0.0, sym)
    deg = np.maximum(sym.sum(axis=-1), DEGREE_FLOOR)
    dinv = 1.0 / np.sqrt(deg)
    normed = sym * dinv[..., :, None] * dinv[..., None, :]
    return np.where(eye, 1.0, -normed) if m.ndim == 2 else np.eye(n) - normed


def laplacian_spectrum(a) -> SpectralSignature:
    """Ascending eigenvalues of the normalized Laplacian of a soft adjacency.

    The input is symmetrized and its diagonal zeroed; degrees are floored at
    1e-8 so isolated nodes contribute eigenvalue 1 rather than a division
    by zero.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"adjacency must be square, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NumericError("adjacency contains non-finite entries")
    lap = _normalized_laplacian(a)
    return SpectralSignature(np.linalg.eigvalsh(lap))


def _spectra_batch(adjacencies: np.ndarray) -> np.ndarray:
    """(B, N, N) soft adjacencies -> (B, N) ascending spectra."""
    if not np.all(np.isfinite(adjacencies)):
        raise NumericError("decoded adjacencies contain non-finite entries")
    return np.linalg.eigvalsh(_normalized_laplacian(adjacencies))


def global_similarity(a: SpectralSignature, b: SpectralSignature, sigma: float) -> float:
    """RBF kernel on spectral distance: exp(-||a - b||^2 / (2 sigma^2))."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if a.eigenvalues.shape != b.eigenvalues.shape:
        raise DataError(
            f"spectral dimensions differ: {a.eigenvalues.shape} vs {b.eigenvalues.shape}"
        )
    d2 = float(np.sum((a.eigenvalues - b.eigenvalues) ** 2))
    return math.exp(-d2 / (2.0 * sigma * sigma))


def local_similarity(h_i, h_j) -> float:
    """Cosine similarity; defined as 0 when either vector is zero."""
    h_i = np.asarray(h_i, dtype=np.float64).ravel()
    h_j = np.asarray(h_j, dtype=np.float64).ravel()
    ni, nj = np.linalg.norm(h_i), np.linalg.norm(h_j)
    if ni == 0 or nj == 0:
        return 0.0
    return float(h_i @ h_j / (ni * nj))


def blended_similarity(s_global, s_local, gamma: float):
    """Convex blend gamma * global + (1 - gamma) * local (scalars or matrices)."""
    if not 0 <= gamma <= 1:
        raise ValueError(f"gamma must be in [0, 1], got {gamma}")
    return gamma * s_global + (1.0 - gamma) * s_local


def _row_normalize(h: torch.Tensor) -> torch.Tensor:
    norms = h.norm(dim=-1, keepdim=True)
    return torch.where(norms > 0, h / norms.clamp_min(1e-300), torch.zeros_like(h))


def graph_contrastive_loss(sims, labels, tau: float) -> torch.Tensor:
    """Supervised InfoNCE over a blended-similarity matrix.

    Each anchor averages the log-softmax mass of all its same-class batch
    members against every other batch member; anchors without a class-mate
    are skipped. Row maxima are subtracted before exponentiation.
    """
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    sims = sims if isinstance(sims, torch.Tensor) else torch.as_tensor(np.asarray(sims, dtype=np.float64))
    labels = np.asarray(labels)
    b = sims.shape[0]
    if sims.shape != (b, b) or labels.shape != (b,):
        raise ValueError(f"need (B, B) sims and (B,) labels, got {tuple(sims.shape)}, {labels.shape}")
    if b < 2:
        raise DegenerateBatchError(f"contrastive batch needs >= 2 graphs, got {b}")

    eye = torch.eye(b, dtype=torch.bool)
    logits = (sims / tau).masked_fill(eye, float("-inf"))
    row_max = logits.max(dim=1, keepdim=True).values
    log_denom = row_max.squeeze(1) + torch.log(torch.exp(logits - row_max).sum(dim=1))
    log_prob = logits - log_denom.unsqueeze(1)

    pos = torch.as_tensor(labels[:, None] == labels[None, :]) & ~eye
    pos_counts = pos.sum(dim=1)
    contributing = pos_counts > 0
    if not bool(contributing.any()):
        raise DegenerateBatchError("no anchor has a same-class partner in the batch")
    per_anchor = torch.where(pos, log_prob, torch.zeros_like(log_prob)).sum(dim=1)
    per_anchor = -per_anchor[contributing] / pos_counts[contributing].to(torch.float64)
    return per_anchor.mean()


def infograph_loss(node_embs, graph_embs, tau: float) -> torch.Tensor:
    """Node-graph InfoNCE: each node against all graph embeddings in the batch.

    Similarity is cosine; the positive is the node's own graph and the
    denominator ranges over the whole batch. The result is the mean
    negative log-softmax over all nodes.
    """
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    graph_embs = graph_embs if isinstance(graph_embs, torch.Tensor) else torch.as_tensor(np.asarray(graph_embs, dtype=np.float64))
    b = graph_embs.shape[0]
    if b < 2:
        raise DegenerateBatchError(f"node-graph contrast needs >= 2 graphs, got {b}")

    if isinstance(node_embs, torch.Tensor):
        flat = node_embs.reshape(-1, node_embs.shape[-1])
        graph_ids = torch.arange(b).repeat_interleave(node_embs.shape[1])
    else:
        parts = [e if isinstance(e, torch.Tensor) else torch.as_tensor(np.asarray(e, dtype=np.float64)) for e in node_embs]
        if len(parts) != b:
            raise ValueError(f"{len(parts)} node-embedding blocks for {b} graphs")
        flat = torch.cat(parts, dim=0)
        graph_ids = torch.cat([torch.full((p.shape[0],), i, dtype=torch.long) for i, p in enumerate(parts)])

    sims = _row_normalize(flat) @ _row_normalize(graph_embs).T / tau
    row_max = sims.max(dim=1, keepdim=True).values
    log_denom = row_max.squeeze(1) + torch.log(torch.exp(sims - row_max).sum(dim=1))
    log_prob = sims[torch.arange(flat.shape[0]), graph_ids] - log_denom
    return -log_prob.mean()


def total_loss(l_graph, l_info, alpha: float):
    """Joint objective: graph loss plus alpha times the node-graph loss."""
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    return l_graph + alpha * l_info


def _batch_sigma(spectra: np.ndarray, cfg: PretrainConfig) -> float:
    if cfg.sigma_mode == "fixed":
        return max(cfg.sigma_value, SIGMA_FLOOR)
    diffs = spectra[:, None, :] - spectra[None, :, :]
    dists = np.sqrt((diffs ** 2).sum(axis=-1))
    iu = np.triu_indices(spectra.shape[0], k=1)
    return max(float(np.median(dists[iu])), SIGMA_FLOOR)


def _stack_graphs(graphs):
    n = graphs[0].n_nodes
    if any(g.n_nodes != n for g in graphs):
        raise DataError("pretraining requires all graphs in a batch to share the node count")
    adj = torch.as_tensor(np.stack([g.adjacency for g in graphs]))
    feats = torch.as_tensor(np.stack([g.features.values for g in graphs]))
    labels = np.array([g.label for g in graphs])
    return adj, feats, labels


def pretrain(
    graphs,
    cfg: PretrainConfig = None,
    policy: AugmentationPolicy = None,
    seed: int = 0,
    encoder: GraphEncoder = None,
):
    """Contrastively pretrain a graph encoder on labeled brain graphs.

    Per batch: augment every graph, encode nodes and graph, decode the soft
    adjacency, take its Laplacian spectrum (no gradient), blend the RBF
    spectral similarity with embedding cosine similarity, and minimize the
    joint contrastive objective with Adam. Single-class batches are skipped
    with a warning; an epoch in which every batch is skipped aborts training.

    Returns
    -------
    (GraphEncoder, LossTrace)
    """
    cfg = cfg or PretrainConfig()
    policy = policy or AugmentationPolicy()
    if len(graphs) < 2:
        raise DataError("pretraining needs at least 2 graphs")
    n_feats = graphs[0].features.values.shape[1]
    if encoder is None:
        encoder = init_encoder(
            n_feats, hidden=cfg.hidden, seed=seed, proj_dim=cfg.proj_dim, dropout=cfg.dropout
        )
    optimizer = torch.optim.Adam(encoder.parameters(), lr=cfg.lr, weight_decay=cfg.weight_decay)
    trace = LossTrace()

    for epoch in range(cfg.epochs):
        order = np.random.default_rng([seed, epoch]).permutation(len(graphs))
        epoch_losses = []
        skipped = 0
        n_batches = 0
        for batch_no, start in enumerate(range(0, len(order), cfg.batch_size)):
            idx = order[start : start + cfg.batch_size]
            n_batches += 1
            batch = [
                augment(graphs[i], policy, np.random.default_rng([policy.seed, epoch, int(i)]))
                for i in idx
            ]
            adj, feats, labels = _stack_graphs(batch)
            if len(idx) < 2 or len(set(labels.tolist())) < 2:
                logger.warning(
                    "epoch %d batch %d: degenerate batch (size %d, single class), skipped",
                    epoch, batch_no, len(idx),
                )
                skipped += 1
                continue

            node_emb = encoder.encode_nodes_batch(adj, feats, train_mode=True)
            graph_emb = encoder.encode_graph_batch(node_emb)
            soft_adj = encoder.decode_adjacency_batch(node_emb)

            spectra = _spectra_batch(soft_adj.detach().numpy())
            sigma = _batch_sigma(spectra, cfg)
            diffs = spectra[:, None, :] - spectra[None, :, :]
            s_global = torch.as_tensor(np.exp(-(diffs ** 2).sum(axis=-1) / (2.0 * sigma * sigma)))
            s_local = _row_normalize(graph_emb) @ _row_normalize(graph_emb).T
            sims = blended_similarity(s_global, s_local, cfg.gamma)

            try:
                l_graph = graph_contrastive_loss(sims, labels, cfg.tau)
            except DegenerateBatchError:
                logger.warning("epoch %d batch %d: no valid anchors, skipped", epoch, batch_no)
                skipped += 1
                continue
            l_info = infograph_loss(node_emb, graph_emb, cfg.tau)
            loss = total_loss(l_graph, l_info, cfg.alpha)

            optimizer.zero_grad()
            loss.backward()
            optimizer.step()

            values = (l_graph.item(), l_info.item(), loss.item())
            trace.records.append((epoch, batch_no, *values))
            epoch_losses.append(values[2])

        if n_batches > 0 and skipped == n_batches:
            raise TrainingError(f"epoch {epoch}: every batch was degenerate; check the labels")
        trace.epoch_means.append(float(np.mean(epoch_losses)) if epoch_losses else float("nan"))

    return encoder, trace
