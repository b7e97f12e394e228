"""Ranking metrics (AUC, AUPR, F1) and the evaluation report."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


def roc_auc(scores, labels) -> float:
    """Probability that a random positive outranks a random negative;
    ties count 0.5. Computed from average ranks in O(n log n)."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ConfigError("AUC needs at least one positive and one negative")
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(len(scores), dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        # 1-based average rank shared by the tie group
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    rank_sum = ranks[labels == 1].sum()
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def aupr(scores, labels) -> float:
    """Average precision: mean over positives of precision at each
    positive's rank in descending-score order. Ties are broken by stable
    input order (no tie-group averaging)."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n_pos = int((labels == 1).sum())
    if n_pos == 0:
        raise ConfigError("AUPR needs at least one positive")
    order = np.argsort(-scores, kind="stable")
    hits = 0
    ap = 0.0
    for rank, idx in enumerate(order, start=1):
        if labels[idx] == 1:
            hits += 1
            ap += hits / rank
    return ap / n_pos


def f1(scores, labels, threshold: float = 0.5) -> tuple[float, dict[str, int]]:
    """F1 at a fixed threshold (score >= threshold predicts positive);
    defined as 0 when precision + recall is 0."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    pred = scores >= threshold
    counts = {
        "tp": int((pred & (labels == 1)).sum()),
        "fp": int((pred & (labels == 0)).sum()),
        "tn": int((~pred & (labels == 0)).sum()),
        "fn": int((~pred & (labels == 1)).sum()),
    }
    tp, fp, fn = counts["tp"], counts["fp"], counts["fn"]
    if tp == 0:
        return 0.0, counts
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2 * precision * recall / (precision + recall), counts


@dataclass
class MetricsReport:
    dataset: str
    split_mode: str
    seed: int
    auc: float
    aupr: float
    f1: float
    threshold: float
    tp: int
    fp: int
    tn: int
    fn: int
    n_samples: int

    def as_dict(self) -> dict:
        return dict(self.__dict__)

    def write_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.as_dict(), fh, indent=2)
            fh.write("\n")

    def render(self) -> str:
        rows = [
            ("dataset", self.dataset),
            ("split_mode", self.split_mode),
            ("seed", str(self.seed)),
            ("n_samples", str(self.n_samples)),
            ("auc", f"{self.auc:.6f}"),
            ("aupr", f"{self.aupr:.6f}"),
            ("f1", f"{self.f1:.6f}"),
            ("threshold", f"{self.threshold:g}"),
            ("confusion", f"tp={self.tp} fp={self.fp} tn={self.tn} fn={self.fn}"),
        ]
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k.ljust(width)}\t{v}" for k, v in rows)


def evaluate(scores, labels, dataset: str = "", split_mode: str = "",
             seed: int = 0, threshold: float = 0.5) -> MetricsReport:
    f1_value, counts = f1(scores, labels, threshold)
    return MetricsReport(
        dataset=dataset, split_mode=split_mode, seed=seed,
        auc=roc_auc(scores, labels), aupr=aupr(scores, labels), f1=f1_value,
        threshold=threshold, n_samples=len(scores), **counts)
