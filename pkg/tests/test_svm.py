import numpy as np
import pytest

from sessionseg.models import SvmConfig, fit_svm, load_model, save_model
from sessionseg.models.common import ModelError
from sessionseg.models.svm import _train_dual, fit_platt, kkt_residual


def _blobs(n_per_side=40, seed=0, spread=0.6):
    rng = np.random.default_rng(seed)
    X = np.vstack(
        [rng.normal(-2.0, spread, (n_per_side, 2)),
         rng.normal(2.0, spread, (n_per_side, 2))]
    )
    y = np.array([0] * n_per_side + [1] * n_per_side)
    perm = rng.permutation(2 * n_per_side)
    return X[perm], y[perm]


def _circles(n=120, seed=1):
    rng = np.random.default_rng(seed)
    angles = rng.uniform(0, 2 * np.pi, n)
    radius = np.where(np.arange(n) % 2 == 0, 1.0, 3.0)
    radius = radius + rng.normal(scale=0.1, size=n)
    X = np.column_stack([radius * np.cos(angles), radius * np.sin(angles)])
    y = (np.arange(n) % 2 == 0).astype(int)
    return X, y


class TestFit:
    def test_blobs_generalize(self):
        X, y = _blobs(seed=2)
        X_test, y_test = _blobs(seed=3)
        model = fit_svm(X, y, SvmConfig(C=1.0, gamma=0.5))
        acc = np.mean((model.predict_proba(X_test) >= 0.5) == y_test)
        assert acc >= 0.95

    def test_duals_within_box(self):
        rng = np.random.default_rng(4)
        for trial in range(5):
            X = rng.normal(size=(30, 2))
            y = (X[:, 0] + X[:, 1] > 0).astype(int)
            if y.min() == y.max():
                continue
            cfg = SvmConfig(C=0.7, gamma=0.8, seed=trial)
            y_pm = 2.0 * y - 1.0
            alpha, _ = _train_dual(
                X, y_pm, cfg, np.random.default_rng(cfg.seed)
            )
            assert np.all(alpha >= -1e-12)
            assert np.all(alpha <= cfg.C + 1e-12)

    def test_concentric_circles_nonlinear(self):
        X, y = _circles()
        model = fit_svm(X, y, SvmConfig(C=5.0, gamma=1.0))
        acc = np.mean((model.predict_proba(X) >= 0.5) == y)
        assert acc >= 0.9

    def test_kkt_residual_small(self):
        rng = np.random.default_rng(5)
        for trial in range(5):
            X = rng.normal(size=(25, 3))
            y = (X[:, 0] - 0.5 * X[:, 2] > 0).astype(int)
            if y.min() == y.max():
                continue
            cfg = SvmConfig(C=1.0, gamma=0.5, seed=trial)
            y_pm = 2.0 * y - 1.0
            alpha, b = _train_dual(X, y_pm, cfg, np.random.default_rng(cfg.seed))
            assert kkt_residual(X, y, alpha, b, cfg) <= 1e-3

    def test_single_class_rejected(self):
        X = np.random.default_rng(0).normal(size=(8, 2))
        with pytest.raises(ModelError):
            fit_svm(X, np.zeros(8, dtype=int), SvmConfig())

    def test_bad_config_rejected(self):
        with pytest.raises(ModelError):
            SvmConfig(C=0.0)
        with pytest.raises(ModelError):
            SvmConfig(gamma=-1.0)


class TestCalibration:
    def test_platt_is_monotone_decreasing_in_z(self):
        # P(y=1|f) = 1/(1+exp(A f + B)) with A < 0 on separable data
        decision = np.linspace(-2, 2, 50)
        y = (decision > 0).astype(int)
        A, B = fit_platt(decision, y)
        assert A < 0

    def test_proba_bounds(self):
        X, y = _blobs(seed=6)
        model = fit_svm(X, y, SvmConfig(C=1.0, gamma=0.5))
        probe = np.random.default_rng(7).normal(scale=30.0, size=(100, 2))
        proba = model.predict_proba(probe)
        assert np.all((proba >= 0.0) & (proba <= 1.0))

    def test_separable_probabilities_ordered(self):
        X, y = _blobs(seed=8)
        model = fit_svm(X, y, SvmConfig(C=1.0, gamma=0.5))
        p_neg = model.predict_proba(np.array([[-2.0, -2.0]]))[0]
        p_pos = model.predict_proba(np.array([[2.0, 2.0]]))[0]
        assert p_pos > 0.5 > p_neg


class TestSerialization:
    def test_roundtrip_bit_exact(self, tmp_path):
        X, y = _blobs(seed=9, n_per_side=25)
        model = fit_svm(X, y, SvmConfig(C=1.0, gamma=0.3), metadata={"w": 2})
        path = tmp_path / "svm.json"
        save_model(model, path)
        loaded = load_model(path)
        probe = np.random.default_rng(10).normal(size=(100, 2))
        np.testing.assert_array_equal(
            model.predict_proba(probe), loaded.predict_proba(probe)
        )

    def test_guard_rejects_oversized(self):
        from sessionseg.models.svm import MAX_TRAIN_ROWS

        X = np.zeros((MAX_TRAIN_ROWS + 1, 1))
        y = np.zeros(MAX_TRAIN_ROWS + 1, dtype=int)
        y[0] = 1
        with pytest.raises(ModelError, match="guard"):
            fit_svm(X, y, SvmConfig())
