"""Delimited reports and the matplotlib figures rendered beside them.

Report files are plain TSV under a versioned header so they diff and
byte-compare cleanly; figures are PNG renderings of the same data for
eyeballing.  Nothing here feeds back into the pipeline.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from sessionseg.explain import ImportanceReport
from sessionseg.fileio import format_float, read_header, write_header
from sessionseg.metrics import pr_auc, roc_auc


def write_table(
    path: str | Path, kind: str, columns: Sequence[str], rows: Sequence[Sequence]
) -> None:
    """TSV with a versioned header line and a column-name line."""
    with open(path, "w", encoding="utf-8") as fh:
        write_header(fh, kind, 1, {"columns": list(columns), "rows": len(rows)})
        fh.write("\t".join(columns) + "\n")
        for row in rows:
            cells = [
                format_float(cell) if isinstance(cell, float) else str(cell)
                for cell in row
            ]
            fh.write("\t".join(cells) + "\n")


def read_table(path: str | Path, kind: str) -> tuple[list[str], list[list[str]]]:
    with open(path, encoding="utf-8") as fh:
        read_header(fh, kind, 1)
        columns = fh.readline().rstrip("\n").split("\t")
        rows = [line.rstrip("\n").split("\t") for line in fh if line.strip()]
    return columns, rows


def _pr_curve_points(y: np.ndarray, scores: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    order = np.argsort(-scores, kind="mergesort")
    y_sorted = y[order]
    tp = np.cumsum(y_sorted)
    k = np.arange(1, y.shape[0] + 1)
    precision = tp / k
    recall = tp / max(int(y.sum()), 1)
    return recall, precision


def _roc_curve_points(y: np.ndarray, scores: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    order = np.argsort(-scores, kind="mergesort")
    y_sorted = y[order]
    tp = np.cumsum(y_sorted)
    fp = np.cumsum(1 - y_sorted)
    tpr = tp / max(int(y.sum()), 1)
    fpr = fp / max(int((1 - y).sum()), 1)
    return np.concatenate([[0.0], fpr]), np.concatenate([[0.0], tpr])


def plot_curves(
    out_prefix: str | Path, named_scores: dict[str, tuple[np.ndarray, np.ndarray]]
) -> list[Path]:
    """PR and ROC curve figures for one or more (y, scores) series."""
    out_prefix = Path(out_prefix)
    written = []

    fig, ax = plt.subplots(figsize=(5, 4))
    for name, (y, scores) in named_scores.items():
        recall, precision = _pr_curve_points(np.asarray(y), np.asarray(scores))
        ax.plot(recall, precision, label=f"{name} (AP={pr_auc(y, scores):.3f})")
    ax.set_xlabel("Recall")
    ax.set_ylabel("Precision")
    ax.set_title("Precision-recall")
    ax.legend(loc="lower left", fontsize=8)
    fig.tight_layout()
    path = out_prefix.with_name(out_prefix.name + "_pr.png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(5, 4))
    for name, (y, scores) in named_scores.items():
        fpr, tpr = _roc_curve_points(np.asarray(y), np.asarray(scores))
        ax.plot(fpr, tpr, label=f"{name} (AUC={roc_auc(y, scores):.3f})")
    ax.plot([0, 1], [0, 1], ls="--", c="gray", lw=0.8)
    ax.set_xlabel("False positive rate")
    ax.set_ylabel("True positive rate")
    ax.set_title("ROC")
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    path = out_prefix.with_name(out_prefix.name + "_roc.png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)
    return written


def plot_importance(path: str | Path, report: ImportanceReport, top_n: int = 20) -> Path:
    """Horizontal bar chart of the top mean-|contribution| features."""
    top = report.ranking[:top_n][::-1]
    labels = [name for name, _ in top]
    values = [val for _, val in top]
    fig, ax = plt.subplots(figsize=(6, 0.3 * len(top) + 1.2))
    ax.barh(range(len(top)), values, color="#4878a8")
    ax.set_yticks(range(len(top)))
    ax.set_yticklabels(labels, fontsize=7)
    ax.set_xlabel("mean |contribution|")
    ax.set_title("Feature importance")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def plot_session_lengths(path: str | Path, lengths: Sequence[int]) -> Path:
    fig, ax = plt.subplots(figsize=(5, 4))
    upper = max(lengths)
    ax.hist(lengths, bins=range(1, min(upper, 40) + 2), color="#4878a8")
    ax.set_xlabel("Session length (items)")
    ax.set_ylabel("Sessions")
    ax.set_title("Session length distribution")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def plot_threshold_sweep(path: str | Path, rows: Sequence[dict]) -> Path:
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot([r["threshold"] for r in rows], [r["f1"] for r in rows], marker=".")
    ax.set_xlabel("Score threshold")
    ax.set_ylabel("F1")
    ax.set_title("Baseline threshold sweep")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)
