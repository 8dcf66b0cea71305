"""Soft-margin RBF-kernel SVM trained by sequential minimal optimization.

The dual problem is solved pairwise: the outer loop scans for
Karush-Kuhn-Tucker violations, the inner step optimizes two multipliers
analytically.  Decision values are mapped to probabilities by a
sigmoid fit (Platt scaling) on internal 3-fold out-of-fold decisions so
the calibration never sees its own training scores.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from sessionseg.models.common import ModelError, validate_rows, validate_xy

MAX_TRAIN_ROWS = 50_000


@dataclass(frozen=True)
class SvmConfig:
    C: float = 1.0
    gamma: float = 0.1
    tol: float = 1e-3
    max_passes: int = 200
    calibration_folds: int = 3
    seed: int = 0

    def __post_init__(self) -> None:
        if self.C <= 0 or self.gamma <= 0:
            raise ModelError("C and gamma must be > 0")


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    sq = (
        np.sum(A * A, axis=1)[:, None]
        + np.sum(B * B, axis=1)[None, :]
        - 2.0 * (A @ B.T)
    )
    return np.exp(-gamma * np.maximum(sq, 0.0))


class _Smo:
    """Platt-style SMO over a precomputed kernel matrix."""

    def __init__(
        self, K: np.ndarray, y: np.ndarray, C: float, tol: float, rng: np.random.Generator
    ) -> None:
        self.K = K
        self.y = y  # in {-1, +1}
        self.C = C
        self.tol = tol
        self.rng = rng
        n = y.shape[0]
        self.alpha = np.zeros(n)
        self.b = 0.0
        self.f = np.zeros(n)  # decision value minus b

    def _error(self, i: int) -> float:
        return self.f[i] + self.b - self.y[i]

    def _take_step(self, i1: int, i2: int, e2: float) -> bool:
        if i1 == i2:
            return False
        a1, a2 = self.alpha[i1], self.alpha[i2]
        y1, y2 = self.y[i1], self.y[i2]
        e1 = self._error(i1)
        s = y1 * y2
        if s > 0:
            lo, hi = max(0.0, a1 + a2 - self.C), min(self.C, a1 + a2)
        else:
            lo, hi = max(0.0, a2 - a1), min(self.C, self.C + a2 - a1)
        if lo >= hi:
            return False
        k11, k12, k22 = self.K[i1, i1], self.K[i1, i2], self.K[i2, i2]
        eta = k11 + k22 - 2.0 * k12
        if eta > 0:
            a2_new = a2 + y2 * (e1 - e2) / eta
            a2_new = min(max(a2_new, lo), hi)
        else:
            # degenerate curvature: pick the better box endpoint
            f1 = y1 * (e1 + self.b) - a1 * k11 - s * a2 * k12
            f2 = y2 * (e2 + self.b) - s * a1 * k12 - a2 * k22
            l1 = a1 + s * (a2 - lo)
            h1 = a1 + s * (a2 - hi)
            lo_obj = (
                l1 * f1 + lo * f2 + 0.5 * l1 * l1 * k11 + 0.5 * lo * lo * k22
                + s * lo * l1 * k12
            )
            hi_obj = (
                h1 * f1 + hi * f2 + 0.5 * h1 * h1 * k11 + 0.5 * hi * hi * k22
                + s * hi * h1 * k12
            )
            if lo_obj < hi_obj - 1e-12:
                a2_new = lo
            elif lo_obj > hi_obj + 1e-12:
                a2_new = hi
            else:
                a2_new = a2
        if abs(a2_new - a2) < 1e-12 * (a2_new + a2 + 1e-12):
            return False
        a1_new = a1 + s * (a2 - a2_new)

        d1, d2 = y1 * (a1_new - a1), y2 * (a2_new - a2)
        b1 = self.b - e1 - d1 * k11 - d2 * k12
        b2 = self.b - e2 - d1 * k12 - d2 * k22
        if 0.0 < a1_new < self.C:
            new_b = b1
        elif 0.0 < a2_new < self.C:
            new_b = b2
        else:
            new_b = (b1 + b2) / 2.0

        self.alpha[i1], self.alpha[i2] = a1_new, a2_new
        self.f += d1 * self.K[i1] + d2 * self.K[i2]
        self.b = new_b
        return True

    def _examine(self, i2: int) -> bool:
        y2, a2 = self.y[i2], self.alpha[i2]
        e2 = self._error(i2)
        r2 = e2 * y2
        if not ((r2 < -self.tol and a2 < self.C) or (r2 > self.tol and a2 > 0)):
            return False
        non_bound = np.flatnonzero((self.alpha > 0) & (self.alpha < self.C))
        if non_bound.shape[0] > 1:
            errors = self.f[non_bound] + self.b - self.y[non_bound]
            i1 = int(non_bound[np.argmax(np.abs(errors - e2))])
            if self._take_step(i1, i2, e2):
                return True
        start = int(self.rng.integers(0, self.y.shape[0]))
        for offset in range(non_bound.shape[0]):
            i1 = int(non_bound[(start + offset) % non_bound.shape[0]])
            if self._take_step(i1, i2, e2):
                return True
        start = int(self.rng.integers(0, self.y.shape[0]))
        for offset in range(self.y.shape[0]):
            i1 = (start + offset) % self.y.shape[0]
            if self._take_step(i1, i2, e2):
                return True
        return False

    def solve(self, max_passes: int) -> None:
        examine_all = True
        for _pass in range(max_passes):
            changed = 0
            if examine_all:
                for i in range(self.y.shape[0]):
                    changed += self._examine(i)
            else:
                for i in np.flatnonzero((self.alpha > 0) & (self.alpha < self.C)):
                    changed += self._examine(int(i))
            if examine_all:
                if changed == 0:
                    break
                examine_all = False
            elif changed == 0:
                examine_all = True


def fit_platt(
    decision: np.ndarray, y: np.ndarray, max_iter: int = 100
) -> tuple[float, float]:
    """Sigmoid calibration parameters (A, B) with P(y=1|f) = 1/(1+exp(Af+B)).

    Newton iterations with backtracking on the regularized targets of
    Lin, Weng & Keerthi's robust formulation.
    """
    prior1 = float(np.sum(y == 1))
    prior0 = float(y.shape[0] - prior1)
    hi = (prior1 + 1.0) / (prior1 + 2.0)
    lo = 1.0 / (prior0 + 2.0)
    t = np.where(y == 1, hi, lo)
    A, B = 0.0, float(np.log((prior0 + 1.0) / (prior1 + 1.0)))

    def objective(a: float, b: float) -> float:
        z = decision * a + b
        return float(
            np.sum(np.where(z >= 0, t * z + np.logaddexp(0.0, -z),
                            (t - 1.0) * z + np.logaddexp(0.0, z)))
        )

    current = objective(A, B)
    for _ in range(max_iter):
        z = decision * A + B
        p = np.where(z >= 0, np.exp(-z) / (1.0 + np.exp(-z)),
                     1.0 / (1.0 + np.exp(z)))
        d1 = t - p
        d2 = p * (1.0 - p)
        g1 = float(np.sum(decision * d1))
        g2 = float(np.sum(d1))
        if abs(g1) < 1e-5 and abs(g2) < 1e-5:
            break
        h11 = float(np.sum(decision * decision * d2)) + 1e-12
        h22 = float(np.sum(d2)) + 1e-12
        h21 = float(np.sum(decision * d2))
        det = h11 * h22 - h21 * h21
        dA = -(h22 * g1 - h21 * g2) / det
        dB = -(-h21 * g1 + h11 * g2) / det
        step = 1.0
        while step >= 1e-10:
            new_a, new_b = A + step * dA, B + step * dB
            new_obj = objective(new_a, new_b)
            if new_obj < current + 1e-4 * step * (g1 * dA + g2 * dB):
                A, B, current = new_a, new_b, new_obj
                break
            step /= 2.0
        else:
            break
    return A, B


@dataclass
class SvmModel:
    kind = "svm"
    config: SvmConfig
    support_vectors: np.ndarray
    dual_coef: np.ndarray  # alpha_i * y_i for support vectors
    bias: float
    platt_a: float
    platt_b: float
    feature_dim: int
    metadata: dict = field(default_factory=dict)

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        X = validate_rows(X, self.feature_dim)
        K = rbf_kernel(X, self.support_vectors, self.config.gamma)
        return K @ self.dual_coef + self.bias

    # SHAP's linear surrogate uses this margin as the model output
    def predict_margin(self, X: np.ndarray) -> np.ndarray:
        return self.decision_function(X)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        z = self.decision_function(X) * self.platt_a + self.platt_b
        return np.where(
            z >= 0, np.exp(-z) / (1.0 + np.exp(-z)), 1.0 / (1.0 + np.exp(z))
        )

    def margin_gradient(self, x: np.ndarray) -> np.ndarray:
        """Gradient of the decision function at one input row."""
        x = validate_rows(x, self.feature_dim)[0]
        diff = x[None, :] - self.support_vectors
        k = np.exp(-self.config.gamma * np.sum(diff * diff, axis=1))
        return -2.0 * self.config.gamma * ((self.dual_coef * k) @ diff)


def _train_dual(
    X: np.ndarray, y_pm: np.ndarray, cfg: SvmConfig, rng: np.random.Generator
) -> tuple[np.ndarray, float]:
    K = rbf_kernel(X, X, cfg.gamma)
    smo = _Smo(K, y_pm, cfg.C, cfg.tol, rng)
    smo.solve(cfg.max_passes)
    return smo.alpha, smo.b


def kkt_residual(
    X: np.ndarray, y: np.ndarray, alpha: np.ndarray, b: float, cfg: SvmConfig
) -> float:
    """Maximum violation of the dual box/stationarity conditions."""
    y_pm = 2.0 * np.asarray(y, dtype=np.float64) - 1.0
    K = rbf_kernel(X, X, cfg.gamma)
    margin = K @ (alpha * y_pm) + b
    yf = y_pm * margin
    at_zero = alpha <= 1e-9
    at_c = alpha >= cfg.C - 1e-9
    interior = ~at_zero & ~at_c
    viol = np.zeros_like(alpha)
    viol[at_zero] = np.maximum(0.0, 1.0 - yf[at_zero])
    viol[interior] = np.abs(yf[interior] - 1.0)
    viol[at_c] = np.maximum(0.0, yf[at_c] - 1.0)
    return float(viol.max()) if viol.size else 0.0


def fit_svm(
    X: np.ndarray, y: np.ndarray, cfg: SvmConfig, metadata: dict | None = None
) -> SvmModel:
    X, y = validate_xy(X, y)
    n = X.shape[0]
    if n > MAX_TRAIN_ROWS:
        raise ModelError(
            f"kernel SVM guard: {n} rows exceeds the {MAX_TRAIN_ROWS} limit"
        )
    y_pm = 2.0 * y - 1.0
    rng = np.random.default_rng(cfg.seed)

    # out-of-fold decision values for unbiased sigmoid calibration
    order = rng.permutation(n)
    cal_dec: list[np.ndarray] = []
    cal_y: list[np.ndarray] = []
    k = cfg.calibration_folds
    for fold in range(k):
        val = order[fold::k]
        train = np.setdiff1d(order, val)
        if np.unique(y[train]).shape[0] < 2 or val.size == 0:
            continue
        alpha_f, b_f = _train_dual(X[train], y_pm[train], cfg, rng)
        K_val = rbf_kernel(X[val], X[train], cfg.gamma)
        cal_dec.append(K_val @ (alpha_f * y_pm[train]) + b_f)
        cal_y.append(y[val])

    alpha, b = _train_dual(X, y_pm, cfg, rng)
    final_dec = rbf_kernel(X, X, cfg.gamma) @ (alpha * y_pm) + b
    if cal_dec:
        platt_a, platt_b = fit_platt(np.concatenate(cal_dec), np.concatenate(cal_y))
    else:
        platt_a, platt_b = fit_platt(final_dec, y)

    keep = alpha > 1e-12
    model = SvmModel(
        config=cfg,
        support_vectors=X[keep].copy(),
        dual_coef=(alpha * y_pm)[keep],
        bias=b,
        platt_a=platt_a,
        platt_b=platt_b,
        feature_dim=X.shape[1],
        metadata=dict(metadata or {}),
    )
    model.metadata.setdefault("kkt_residual", kkt_residual(X, y, alpha, b, cfg))
    model.metadata.setdefault("n_support", int(keep.sum()))
    return model
