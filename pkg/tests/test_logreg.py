import numpy as np
import pytest

from sessionseg.models import LinearModelConfig, fit_logreg, load_model, save_model
from sessionseg.models.common import ModelError
from sessionseg.models.logreg import logreg_loss_grad


class TestFit:
    def test_one_dimensional_sign(self):
        X = np.array([[-1.0], [1.0]])
        y = np.array([0, 1])
        model = fit_logreg(X, y, LinearModelConfig(C=100.0))
        assert model.weights[0] > 0
        assert model.predict_proba(np.array([[1.0]]))[0] > 0.9

    def test_infinite_regularization_recovers_prior(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(200, 3))
        y = (rng.random(200) < 0.3).astype(int)
        model = fit_logreg(X, y, LinearModelConfig(C=1e-9))
        assert np.max(np.abs(model.weights)) < 1e-4
        prior = float(np.mean(y))
        np.testing.assert_allclose(
            model.predict_proba(X), prior, atol=1e-3
        )

    def test_gradient_near_zero_at_optimum(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(80, 4))
        y = (X[:, 0] + 0.5 * X[:, 1] + rng.normal(scale=0.3, size=80) > 0).astype(int)
        cfg = LinearModelConfig(C=1.0, tol=1e-7)
        model = fit_logreg(X, y, cfg)
        params = np.concatenate([model.weights, [model.bias]])
        _, grad = logreg_loss_grad(params, X.astype(float), y.astype(float), cfg.C)
        assert np.max(np.abs(grad)) <= 1e-5

    def test_single_class_rejected(self):
        X = np.ones((5, 2))
        with pytest.raises(ModelError):
            fit_logreg(X, np.ones(5, dtype=int), LinearModelConfig())


class TestGradientCheck:
    def test_matches_central_differences(self):
        rng = np.random.default_rng(2)
        eps = 1e-6
        for _ in range(10):
            n, d = int(rng.integers(5, 20)), int(rng.integers(1, 5))
            X = rng.normal(size=(n, d))
            y = rng.integers(0, 2, size=n).astype(float)
            C = float(10.0 ** rng.uniform(-2, 2))
            params = rng.normal(size=d + 1)
            _, grad = logreg_loss_grad(params, X, y, C)
            for j in range(d + 1):
                step = np.zeros(d + 1)
                step[j] = eps
                hi, _ = logreg_loss_grad(params + step, X, y, C)
                lo, _ = logreg_loss_grad(params - step, X, y, C)
                numeric = (hi - lo) / (2 * eps)
                denom = max(abs(numeric), 1e-8)
                assert abs(numeric - grad[j]) / denom <= 1e-4


class TestPredict:
    def test_monotone_in_positive_weight_feature(self):
        X = np.array([[-2.0], [-1.0], [1.0], [2.0]])
        y = np.array([0, 0, 1, 1])
        model = fit_logreg(X, y, LinearModelConfig(C=10.0))
        grid = np.linspace(-3, 3, 20)[:, None]
        proba = model.predict_proba(grid)
        assert np.all(np.diff(proba) > 0)

    def test_zero_margin_is_half(self):
        X = np.array([[-1.0], [1.0]])
        model = fit_logreg(X, np.array([0, 1]), LinearModelConfig(C=100.0))
        x_mid = -model.bias / model.weights[0]
        assert model.predict_proba(np.array([[x_mid]]))[0] == pytest.approx(0.5)

    def test_proba_bounds_on_random_inputs(self):
        X = np.array([[-1.0], [1.0]])
        model = fit_logreg(X, np.array([0, 1]), LinearModelConfig(C=100.0))
        probe = np.random.default_rng(3).normal(scale=100.0, size=(200, 1))
        proba = model.predict_proba(probe)
        assert np.all((proba >= 0.0) & (proba <= 1.0))

    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(50, 3))
        y = (X[:, 0] > 0).astype(int)
        model = fit_logreg(X, y, LinearModelConfig(C=2.0), metadata={"w": 1})
        path = tmp_path / "lr.json"
        save_model(model, path)
        loaded = load_model(path)
        probe = rng.normal(size=(40, 3))
        np.testing.assert_array_equal(
            model.predict_proba(probe), loaded.predict_proba(probe)
        )
