"""Unsupervised cosine-threshold segmenter, the comparison method.

Scores each gap by 1 - cosine(adjacent behavior embeddings) so higher
means more boundary-like; a gap is labeled a boundary when the cosine
falls below the threshold.  High adjacent similarity means the user is
still on one topic, so the default direction segments at LOW similarity;
an inverted mode exists because the rule is threshold-symmetric for
ranking metrics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from sessionseg.behavior import EmbeddingTable
from sessionseg.corpus import Session
from sessionseg.features import cosine
from sessionseg.metrics import f1_score, pr_auc, roc_auc


class BaselineError(ValueError):
    """Raised for invalid thresholds or sessions without gaps."""


@dataclass(frozen=True)
class BaselineConfig:
    threshold: float = 0.5
    segment_below: bool = True  # False inverts: boundary when cosine > threshold

    def __post_init__(self) -> None:
        if not -1.0 <= self.threshold <= 1.0:
            raise BaselineError(f"threshold must be in [-1, 1], got {self.threshold}")


def adjacent_cosines(
    session: Session, table: EmbeddingTable
) -> tuple[np.ndarray, np.ndarray]:
    """Per-gap cosine of the adjacent item embeddings plus an OOV flag.

    A missing embedding on either side makes the cosine 0 (the standard
    missing-similarity rule) and flags the gap.
    """
    if session.n_gaps < 1:
        raise BaselineError(f"session {session.session_id} has no gaps")
    cosines = np.zeros(session.n_gaps)
    oov = np.zeros(session.n_gaps, dtype=bool)
    for g in range(session.n_gaps):
        u = table.lookup(session.items[g])
        v = table.lookup(session.items[g + 1])
        if u is None or v is None:
            oov[g] = True
        else:
            cosines[g] = cosine(u, v)
    return cosines, oov


def baseline_scores(
    session: Session, table: EmbeddingTable
) -> tuple[np.ndarray, np.ndarray]:
    """Boundary scores in [0, 2]: 1 - adjacent cosine; OOV gaps score 1."""
    cosines, oov = adjacent_cosines(session, table)
    return 1.0 - cosines, oov


def baseline_segment(
    session: Session, table: EmbeddingTable, cfg: BaselineConfig
) -> list[int]:
    """0/1 gap labels under the threshold rule."""
    cosines, _ = adjacent_cosines(session, table)
    if cfg.segment_below:
        return [int(c < cfg.threshold) for c in cosines]
    return [int(c > cfg.threshold) for c in cosines]


def sweep_thresholds(
    y: np.ndarray,
    scores: np.ndarray,
    thresholds: np.ndarray | None = None,
) -> list[dict]:
    """F1 at each score threshold plus the threshold-free AUC metrics.

    ``scores`` are boundary scores (higher = boundary); a row's
    threshold applies as ``score >= threshold``.
    """
    y = np.asarray(y)
    scores = np.asarray(scores, dtype=np.float64)
    if thresholds is None:
        thresholds = np.unique(scores)
    p = pr_auc(y, scores)
    r = roc_auc(y, scores)
    return [
        {
            "threshold": float(t),
            "f1": f1_score(y, scores, float(t)),
            "pr_auc": p,
            "roc_auc": r,
        }
        for t in thresholds
    ]


def best_threshold_f1(y: np.ndarray, scores: np.ndarray) -> tuple[float, float]:
    """(best threshold, best F1) over all distinct score thresholds."""
    rows = sweep_thresholds(y, scores)
    best = max(rows, key=lambda row: row["f1"])
    return best["threshold"], best["f1"]
