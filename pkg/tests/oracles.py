"""Independent brute-force oracles shared by the unit and acceptance tests.

Each function recomputes its quantity from first principles (exhaustive
pair counting, threshold sweeps, explicit partitions) without touching
the code paths it checks.
"""

import numpy as np


def roc_auc_bruteforce(y: np.ndarray, scores: np.ndarray) -> float:
    """Exhaustive positive/negative pair counting with half credit for ties."""
    pos = scores[y == 1]
    neg = scores[y == 0]
    wins = 0.0
    for p in pos:
        for n in neg:
            if p > n:
                wins += 1.0
            elif p == n:
                wins += 0.5
    return wins / (len(pos) * len(neg))


def pr_auc_bruteforce(y: np.ndarray, scores: np.ndarray) -> float:
    """Exhaustive threshold sweep, recounting the confusion table each time."""
    ap = 0.0
    prev_recall = 0.0
    n_pos = int(np.sum(y == 1))
    for t in sorted(set(scores.tolist()), reverse=True):
        pred = scores >= t
        tp = int(np.sum(pred & (y == 1)))
        fp = int(np.sum(pred & (y == 0)))
        precision = tp / (tp + fp)
        recall = tp / n_pos
        ap += (recall - prev_recall) * precision
        prev_recall = recall
    return ap


def partition_gain(X, y, cfg, feature, threshold):
    """Gain of one explicit (feature, threshold) split under the same
    second-order formula the tree trainer uses, summed row-wise."""
    prior = float(np.mean(y))
    g = prior - y
    h = np.full(y.shape[0], prior * (1.0 - prior))
    lam = cfg.l2_lambda
    mask = X[:, feature] <= threshold
    gl, gr = g[mask].sum(), g[~mask].sum()
    hl, hr = h[mask].sum(), h[~mask].sum()
    parent = (gl + gr) ** 2 / (hl + hr + lam)
    return 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent) - cfg.gamma
