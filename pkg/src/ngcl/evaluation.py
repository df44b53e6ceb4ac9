"""Confusion metrics, ROC/AUC, stratified k-fold splits, and fold reporting.

Metric ratios with a 0/0 denominator are reported as None ("undefined")
and excluded from fold aggregates instead of being silently coerced to 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .contrastive import PretrainConfig, pretrain
from .errors import DataError, StratificationError
from .gatclassifier import GatConfig, finetune, predict_batch
from .graphbuild import AugmentationPolicy

METRIC_NAMES = ("acc", "sen", "spe", "ppv", "npv", "auc")


@dataclass
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass
class FoldReport:
    fold_index: int
    counts: ConfusionCounts
    acc: Optional[float]
    sen: Optional[float]
    spe: Optional[float]
    ppv: Optional[float]
    npv: Optional[float]
    roc: list
    auc: float

    def metric(self, name: str):
        return getattr(self, name)


@dataclass
class CvResult:
    folds: list
    aggregate: dict  # metric -> (mean, sd) over folds where defined


def _ratio(num: int, den: int) -> Optional[float]:
    return None if den == 0 else num / den


def confusion_metrics(scores, labels, threshold: float = 0.5):
    """Confusion counts and derived rates at a decision threshold.

    A score >= `threshold` predicts positive. Returns
    ``(ConfusionCounts, {"acc": ..., "sen": ..., "spe": ..., "ppv": ..., "npv": ...})``
    where undefined (0/0) rates are None.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.size < 1:
        raise DataError(f"scores {scores.shape} and labels {labels.shape} must match, nonempty")
    pred = scores >= threshold
    pos = labels == 1
    tp = int(np.count_nonzero(pred & pos))
    fp = int(np.count_nonzero(pred & ~pos))
    tn = int(np.count_nonzero(~pred & ~pos))
    fn = int(np.count_nonzero(~pred & pos))
    counts = ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn)
    metrics = {
        "acc": _ratio(tp + tn, counts.total),
        "sen": _ratio(tp, tp + fn),
        "spe": _ratio(tn, tn + fp),
        "ppv": _ratio(tp, tp + fp),
        "npv": _ratio(tn, tn + fn),
    }
    return counts, metrics


def roc_auc(scores, labels):
    """ROC points and trapezoidal AUC from a threshold sweep over unique scores.

    Tied scores produce a single ROC step. The curve is anchored at (0, 0)
    and (1, 1).
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    n_pos = int(np.count_nonzero(labels == 1))
    n_neg = int(np.count_nonzero(labels == 0))
    if n_pos == 0 or n_neg == 0:
        raise DataError("AUC undefined: both classes must be present")
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_pos = (labels[order] == 1).astype(np.int64)
    # group ties: step only after the last occurrence of each unique score
    boundaries = np.nonzero(np.diff(sorted_scores))[0]
    idx = np.concatenate([boundaries, [scores.size - 1]])
    cum_tp = np.cumsum(sorted_pos)[idx]
    cum_fp = (idx + 1) - cum_tp
    tpr = np.concatenate([[0.0], cum_tp / n_pos])
    fpr = np.concatenate([[0.0], cum_fp / n_neg])
    auc = float(np.trapezoid(tpr, fpr))
    points = list(zip(fpr.tolist(), tpr.tolist()))
    return points, auc


def kfold_split(n_items: int, labels, k: int = 10, seed: int = 0):
    """Stratified k-fold indices: per class, shuffle then deal round-robin.

    Fold sizes per class differ by at most 1; folds partition the index set.
    """
    labels = np.asarray(labels)
    if labels.shape != (n_items,):
        raise DataError(f"labels shape {labels.shape} does not match n_items={n_items}")
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    rng = np.random.default_rng(seed)
    folds = [[] for _ in range(k)]
    for cls in sorted(set(labels.tolist())):
        members = np.nonzero(labels == cls)[0]
        if members.size < k:
            raise StratificationError(
                f"class {cls} has {members.size} members, fewer than k={k}"
            )
        shuffled = rng.permutation(members)
        for pos, item in enumerate(shuffled):
            folds[pos % k].append(int(item))
    return [np.array(sorted(f), dtype=int) for f in folds]


def cross_validate(
    graphs,
    pretrain_cfg: PretrainConfig = None,
    gat_cfg: GatConfig = None,
    policy: AugmentationPolicy = None,
    k: int = 10,
    seed: int = 0,
    threshold: float = 0.5,
) -> CvResult:
    """Stratified k-fold evaluation of the full pretrain + fine-tune pipeline.

    Each fold pretrains the encoder and fine-tunes the classifier on the
    training folds only, then scores the held-out fold. Fold RNG streams
    derive from ``(seed, fold_index)``.
    """
    pretrain_cfg = pretrain_cfg or PretrainConfig()
    gat_cfg = gat_cfg or GatConfig()
    policy = policy or AugmentationPolicy()
    labels = np.array([g.label for g in graphs])
    folds = kfold_split(len(graphs), labels, k=k, seed=seed)

    reports = []
    for fold_index, test_idx in enumerate(folds):
        fold_seed = int(np.random.default_rng([seed, fold_index]).integers(2**31))
        train_idx = np.setdiff1d(np.arange(len(graphs)), test_idx)
        train = [graphs[i] for i in train_idx]
        test = [graphs[i] for i in test_idx]
        fold_policy = AugmentationPolicy(
            node_mask_ratio=policy.node_mask_ratio,
            edge_perturb_ratio=policy.edge_perturb_ratio,
            seed=fold_seed,
        )
        enc, _ = pretrain(train, pretrain_cfg, fold_policy, seed=fold_seed)
        gat, _ = finetune(train, enc, gat_cfg, seed=fold_seed)
        scores = predict_batch(test, enc, gat)
        test_labels = labels[test_idx]
        counts, metrics = confusion_metrics(scores, test_labels, threshold=threshold)
        roc, auc = roc_auc(scores, test_labels)
        reports.append(
            FoldReport(fold_index=fold_index, counts=counts, roc=roc, auc=auc, **metrics)
        )

    aggregate = {}
    for name in METRIC_NAMES:
        defined = [r.metric(name) for r in reports if r.metric(name) is not None]
        if defined:
            aggregate[name] = (float(np.mean(defined)), float(np.std(defined)))
    return CvResult(folds=reports, aggregate=aggregate)
