"""Classification metrics: thresholded F1, ROC-AUC, and PR-AUC.

ROC-AUC is computed from rank statistics with half credit for ties
(the Mann-Whitney correspondence).  PR-AUC is average precision summed
over distinct score thresholds, so tied scores enter the curve as one
step.  F1 uses predictions ``score >= threshold``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class MetricError(ValueError):
    """Raised for empty or single-class inputs where a metric is undefined."""


@dataclass(frozen=True)
class MetricReport:
    f1: float
    pr_auc: float
    roc_auc: float
    threshold: float
    tp: int
    fp: int
    fn: int
    tn: int


def _validate(y: np.ndarray, scores: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y)
    scores = np.asarray(scores, dtype=np.float64)
    if y.shape != scores.shape or y.ndim != 1:
        raise MetricError(f"shape mismatch: y {y.shape} vs scores {scores.shape}")
    if y.size == 0:
        raise MetricError("empty input")
    if not np.isin(y, (0, 1)).all():
        raise MetricError("labels must be 0 or 1")
    return y.astype(np.int64), scores


def confusion_counts(
    y: np.ndarray, scores: np.ndarray, threshold: float
) -> tuple[int, int, int, int]:
    y, scores = _validate(y, scores)
    pred = scores >= threshold
    tp = int(np.sum(pred & (y == 1)))
    fp = int(np.sum(pred & (y == 0)))
    fn = int(np.sum(~pred & (y == 1)))
    tn = int(np.sum(~pred & (y == 0)))
    return tp, fp, fn, tn


def f1_score(y: np.ndarray, scores: np.ndarray, threshold: float = 0.5) -> float:
    """F1 of predictions ``score >= threshold``; 0 when P + R = 0."""
    tp, fp, fn, _ = confusion_counts(y, scores, threshold)
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def _tied_ranks(scores: np.ndarray) -> np.ndarray:
    """1-based ranks, ties receiving the average of their rank range."""
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(scores.shape[0], dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < scores.shape[0]:
        j = i
        while j + 1 < scores.shape[0] and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def roc_auc(y: np.ndarray, scores: np.ndarray) -> float:
    """P(score+ > score-) + half the tie probability, via rank sums."""
    y, scores = _validate(y, scores)
    n_pos = int(np.sum(y == 1))
    n_neg = y.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricError("roc_auc needs both classes present")
    ranks = _tied_ranks(scores)
    pos_rank_sum = float(np.sum(ranks[y == 1]))
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def pr_auc(y: np.ndarray, scores: np.ndarray) -> float:
    """Average precision over the distinct-threshold precision/recall steps."""
    y, scores = _validate(y, scores)
    n_pos = int(np.sum(y == 1))
    if n_pos == 0:
        raise MetricError("pr_auc needs at least one positive")
    order = np.argsort(-scores, kind="mergesort")
    y_sorted = y[order]
    s_sorted = scores[order]
    tp_cum = np.cumsum(y_sorted)
    k = np.arange(1, y.shape[0] + 1)
    # thresholds close where the next score strictly drops
    boundary = np.ones(y.shape[0], dtype=bool)
    boundary[:-1] = s_sorted[:-1] != s_sorted[1:]
    # sequential accumulation in descending-threshold order mirrors an
    # exhaustive threshold sweep operation for operation
    ap = 0.0
    prev_recall = 0.0
    for tp, seen in zip(tp_cum[boundary], k[boundary]):
        precision = tp / seen
        recall = tp / n_pos
        ap += (recall - prev_recall) * precision
        prev_recall = recall
    return ap


def evaluate_scores(
    y: np.ndarray, scores: np.ndarray, threshold: float = 0.5
) -> MetricReport:
    """All three metrics at once; errors on single-class ground truth."""
    tp, fp, fn, tn = confusion_counts(y, scores, threshold)
    return MetricReport(
        f1=f1_score(y, scores, threshold),
        pr_auc=pr_auc(y, scores),
        roc_auc=roc_auc(y, scores),
        threshold=threshold,
        tp=tp,
        fp=fp,
        fn=fn,
        tn=tn,
    )


def evaluate(model, X_test: np.ndarray, y_test: np.ndarray, threshold: float = 0.5) -> MetricReport:
    """Score a trained model on held-out rows and report F1/PR-AUC/ROC-AUC."""
    scores = model.predict_proba(X_test)
    return evaluate_scores(np.asarray(y_test), scores, threshold)
