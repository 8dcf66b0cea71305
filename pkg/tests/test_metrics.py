import numpy as np
import pytest

from sessionseg.metrics import (
    MetricError,
    evaluate_scores,
    f1_score,
    pr_auc,
    roc_auc,
)

from oracles import pr_auc_bruteforce, roc_auc_bruteforce


class TestF1:
    def test_hand_example(self):
        y = np.array([1, 1, 0, 0])
        s = np.array([0.6, 0.4, 0.6, 0.4])
        assert f1_score(y, s, 0.5) == pytest.approx(0.5)

    def test_perfect(self):
        assert f1_score(np.array([1, 0, 1]), np.array([0.9, 0.1, 0.8]), 0.5) == 1.0

    def test_all_negative_predictions(self):
        assert f1_score(np.array([1, 0, 1]), np.array([0.1, 0.2, 0.3]), 0.5) == 0.0

    def test_empty_errors(self):
        with pytest.raises(MetricError):
            f1_score(np.array([]), np.array([]), 0.5)

    def test_permutation_invariant(self):
        rng = np.random.default_rng(0)
        y = rng.integers(0, 2, size=30)
        s = rng.random(30)
        base = f1_score(y, s, 0.5)
        for _ in range(10):
            perm = rng.permutation(30)
            assert f1_score(y[perm], s[perm], 0.5) == base


class TestRocAuc:
    def test_hand_example(self):
        assert roc_auc(np.array([1, 0, 1, 0]), np.array([0.9, 0.8, 0.7, 0.1])) == 0.75

    def test_perfect_separation(self):
        assert roc_auc(np.array([0, 0, 1, 1]), np.array([0.1, 0.2, 0.8, 0.9])) == 1.0

    def test_all_ties(self):
        assert roc_auc(np.array([0, 1, 0, 1]), np.full(4, 0.5)) == 0.5

    def test_single_class_errors(self):
        with pytest.raises(MetricError):
            roc_auc(np.array([1, 1]), np.array([0.5, 0.6]))

    def test_matches_bruteforce(self):
        rng = np.random.default_rng(42)
        checked = 0
        while checked < 200:
            n = int(rng.integers(2, 21))
            y = rng.integers(0, 2, size=n)
            if y.min() == y.max():
                continue
            if rng.random() < 0.5:
                scores = rng.random(n)  # almost surely distinct
                assert roc_auc(y, scores) == roc_auc_bruteforce(y, scores)
            else:
                scores = rng.integers(0, 4, size=n) / 3.0  # heavy ties
                assert roc_auc(y, scores) == pytest.approx(
                    roc_auc_bruteforce(y, scores), abs=1e-12
                )
            checked += 1

    def test_invariant_under_monotone_transform(self):
        rng = np.random.default_rng(7)
        for _ in range(30):
            n = int(rng.integers(4, 30))
            y = rng.integers(0, 2, size=n)
            if y.min() == y.max():
                continue
            s = rng.random(n)
            base = roc_auc(y, s)
            assert roc_auc(y, np.exp(3.0 * s)) == pytest.approx(base, abs=1e-12)
            assert roc_auc(y, 100.0 + 2.0 * s) == pytest.approx(base, abs=1e-12)


class TestPrAuc:
    def test_positive_ranked_first(self):
        assert pr_auc(np.array([1, 0]), np.array([0.9, 0.1])) == 1.0

    def test_positive_ranked_second(self):
        assert pr_auc(np.array([0, 1]), np.array([0.9, 0.1])) == 0.5

    def test_all_positive(self):
        assert pr_auc(np.array([1, 1]), np.array([0.3, 0.8])) == 1.0

    def test_no_positive_errors(self):
        with pytest.raises(MetricError):
            pr_auc(np.array([0, 0]), np.array([0.1, 0.2]))

    def test_matches_bruteforce(self):
        rng = np.random.default_rng(43)
        checked = 0
        while checked < 200:
            n = int(rng.integers(2, 21))
            y = rng.integers(0, 2, size=n)
            if y.sum() == 0:
                continue
            if rng.random() < 0.5:
                scores = rng.random(n)
                assert pr_auc(y, scores) == pr_auc_bruteforce(y, scores)
            else:
                scores = rng.integers(0, 4, size=n) / 3.0
                assert pr_auc(y, scores) == pytest.approx(
                    pr_auc_bruteforce(y, scores), abs=1e-12
                )
            checked += 1


class TestEvaluate:
    def test_fields_in_unit_interval(self):
        rng = np.random.default_rng(5)
        y = rng.integers(0, 2, size=50)
        y[0], y[1] = 0, 1
        s = rng.random(50)
        report = evaluate_scores(y, s, 0.5)
        for value in (report.f1, report.pr_auc, report.roc_auc):
            assert 0.0 <= value <= 1.0
        assert report.tp + report.fp + report.fn + report.tn == 50

    def test_single_class_test_set_errors(self):
        with pytest.raises(MetricError):
            evaluate_scores(np.zeros(10, dtype=int), np.linspace(0, 1, 10), 0.5)
