"""L2-regularized logistic regression.

Minimizes sum-of-log-losses plus ||w||^2 / (2C); the intercept is not
penalized, so the infinite-regularization limit recovers the class
prior.  The loss and analytic gradient live here (testable against
finite differences); the minimization itself is delegated to L-BFGS.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from sessionseg.models.common import ModelError, sigmoid, validate_rows, validate_xy


@dataclass(frozen=True)
class LinearModelConfig:
    C: float = 1.0
    max_iter: int = 500
    tol: float = 1e-6

    def __post_init__(self) -> None:
        if self.C <= 0:
            raise ModelError(f"C must be > 0, got {self.C}")


def logreg_loss_grad(
    params: np.ndarray, X: np.ndarray, y: np.ndarray, C: float
) -> tuple[float, np.ndarray]:
    """Objective and gradient at params = [w..., b]."""
    w, b = params[:-1], params[-1]
    margin = X @ w + b
    z = 2.0 * y - 1.0
    loss = float(np.sum(np.logaddexp(0.0, -z * margin))) + float(w @ w) / (2.0 * C)
    residual = sigmoid(margin) - y
    grad = np.empty_like(params)
    grad[:-1] = X.T @ residual + w / C
    grad[-1] = residual.sum()
    return loss, grad


@dataclass
class LogRegModel:
    kind = "logreg"
    config: LinearModelConfig
    weights: np.ndarray
    bias: float
    feature_dim: int
    metadata: dict = field(default_factory=dict)
    converged: bool = True
    grad_norm: float = 0.0

    def predict_margin(self, X: np.ndarray) -> np.ndarray:
        X = validate_rows(X, self.feature_dim)
        return X @ self.weights + self.bias

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return sigmoid(self.predict_margin(X))


def fit_logreg(
    X: np.ndarray, y: np.ndarray, cfg: LinearModelConfig, metadata: dict | None = None
) -> LogRegModel:
    X, y = validate_xy(X, y)
    x0 = np.zeros(X.shape[1] + 1)
    result = minimize(
        logreg_loss_grad,
        x0,
        args=(X, y, cfg.C),
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": cfg.max_iter, "gtol": cfg.tol, "ftol": 0.0},
    )
    _, grad = logreg_loss_grad(result.x, X, y, cfg.C)
    grad_norm = float(np.max(np.abs(grad)))
    return LogRegModel(
        config=cfg,
        weights=result.x[:-1],
        bias=float(result.x[-1]),
        feature_dim=X.shape[1],
        metadata=dict(metadata or {}),
        converged=grad_norm <= cfg.tol or bool(result.success),
        grad_norm=grad_norm,
    )
