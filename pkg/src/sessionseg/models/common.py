"""Shared helpers for the classifier implementations."""

from __future__ import annotations

import numpy as np


class ModelError(ValueError):
    """Raised for invalid training data, dims, or corrupt model files."""


def sigmoid(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def log_loss(y: np.ndarray, margin: np.ndarray) -> float:
    """Mean logistic loss of raw margins against {0,1} labels."""
    return float(np.mean(np.logaddexp(0.0, -margin * (2.0 * y - 1.0))))


def validate_xy(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2:
        raise ModelError(f"X must be 2-D, got shape {X.shape}")
    if y.shape != (X.shape[0],):
        raise ModelError(f"y shape {y.shape} does not match X rows {X.shape[0]}")
    if not np.all(np.isfinite(X)):
        raise ModelError("X contains non-finite values")
    if not np.isin(y, (0, 1)).all():
        raise ModelError("y must contain only 0/1 labels")
    y = y.astype(np.float64)
    if y.min() == y.max():
        raise ModelError("training data must contain both classes")
    return X, y


def validate_rows(X: np.ndarray, feature_dim: int) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    if single:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != feature_dim:
        raise ModelError(
            f"input has {X.shape[-1] if X.ndim else 0} features, "
            f"model expects {feature_dim}"
        )
    return X
