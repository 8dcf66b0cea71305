"""Session-grouped k-fold CV and seeded random hyperparameter search.

Cross-validation folds never split a session: all gap rows that share a
group (session id) land in one fold, which prevents the classifier from
memorizing session-specific patterns across the train/validation line.
The search samples each parameter on its own scale (log-uniform,
uniform, or integer) and maximizes mean validation F1 at a fixed
threshold.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from sessionseg.metrics import f1_score


class TuningError(ValueError):
    """Raised for invalid fold counts, spaces, or all-failed searches."""


@dataclass(frozen=True)
class FoldPlan:
    """Per-row fold assignment derived from group ids."""

    k: int
    assignment: np.ndarray

    def fold_indices(self, fold: int) -> tuple[np.ndarray, np.ndarray]:
        """(train_rows, validation_rows) for one fold."""
        val = np.flatnonzero(self.assignment == fold)
        train = np.flatnonzero(self.assignment != fold)
        return train, val


def group_kfold(groups: Sequence[str], k: int, seed: int = 0) -> FoldPlan:
    """Deal whole groups into k folds, balanced by row count.

    Groups are shuffled by the seed, ordered by size (largest first,
    shuffle order breaking ties), and dealt round-robin.
    """
    if k < 2:
        raise TuningError(f"k must be >= 2, got {k}")
    rows_per_group: dict[str, list[int]] = {}
    for i, g in enumerate(groups):
        rows_per_group.setdefault(g, []).append(i)
    names = list(rows_per_group)
    if len(names) < k:
        raise TuningError(f"need at least {k} distinct groups, got {len(names)}")
    random.Random(seed).shuffle(names)
    names.sort(key=lambda g: -len(rows_per_group[g]))
    assignment = np.empty(len(groups), dtype=np.int64)
    for pos, g in enumerate(names):
        assignment[rows_per_group[g]] = pos % k
    return FoldPlan(k=k, assignment=assignment)


@dataclass(frozen=True)
class ParamRange:
    scale: str  # "log", "uniform", or "int"
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if self.lo >= self.hi:
            raise TuningError(f"range requires lo < hi, got [{self.lo}, {self.hi}]")
        if self.scale == "log" and self.lo <= 0:
            raise TuningError("log scale requires lo > 0")
        if self.scale not in ("log", "uniform", "int"):
            raise TuningError(f"unknown scale {self.scale!r}")

    def sample(self, rng: np.random.Generator) -> float | int:
        if self.scale == "log":
            return float(np.exp(rng.uniform(np.log(self.lo), np.log(self.hi))))
        if self.scale == "uniform":
            return float(rng.uniform(self.lo, self.hi))
        return int(rng.integers(int(self.lo), int(self.hi) + 1))


@dataclass(frozen=True)
class SearchSpace:
    params: dict[str, ParamRange]

    def sample(self, rng: np.random.Generator) -> dict[str, float | int]:
        return {name: rng_range.sample(rng) for name, rng_range in self.params.items()}


def gbdt_leafwise_space() -> SearchSpace:
    """Leaf-wise growth ranges (the LightGBM-style knobs)."""
    return SearchSpace(
        {
            "learning_rate": ParamRange("log", 1e-4, 0.1),
            "feature_fraction": ParamRange("uniform", 0.5, 1.0),
            "l2_lambda": ParamRange("log", 0.1, 10.0),
            "num_leaves": ParamRange("int", 4, 768),
            "min_hessian": ParamRange("log", 1e-4, 100.0),
            "bagging_fraction": ParamRange("uniform", 0.5, 1.0),
        }
    )


def gbdt_levelwise_space() -> SearchSpace:
    """Level-wise growth ranges (the XGBoost-style knobs)."""
    return SearchSpace(
        {
            "learning_rate": ParamRange("log", 1e-4, 0.1),
            "feature_fraction": ParamRange("uniform", 0.5, 1.0),
            "gamma": ParamRange("log", 1e-3, 100.0),
            "l2_lambda": ParamRange("log", 0.1, 10.0),
            "max_depth": ParamRange("int", 3, 14),
            "min_hessian": ParamRange("log", 1e-4, 100.0),
            "bagging_fraction": ParamRange("uniform", 0.5, 1.0),
        }
    )


def svm_space() -> SearchSpace:
    return SearchSpace(
        {
            "C": ParamRange("log", 1e-4, 10.0),
            "gamma": ParamRange("log", 1e-4, 1.0),
        }
    )


def logreg_space() -> SearchSpace:
    return SearchSpace({"C": ParamRange("log", 1e-4, 10.0)})


@dataclass
class TrialResult:
    trial: int
    params: dict
    fold_f1: list[float] = field(default_factory=list)
    mean_f1: float = float("nan")
    status: str = "ok"
    error: str = ""


@dataclass
class SearchResult:
    best_params: dict
    best_score: float
    best_trial: int
    trials: list[TrialResult]


def random_search(
    space: SearchSpace,
    n_trials: int,
    X: np.ndarray,
    y: np.ndarray,
    folds: FoldPlan,
    trainer: Callable[[dict, np.ndarray, np.ndarray], object],
    seed: int = 0,
    threshold: float = 0.5,
) -> SearchResult:
    """Sample configs, score each by mean grouped-CV F1, return the argmax.

    A trial whose training raises is marked failed and the search
    continues; if every trial fails the search errors out.
    """
    if n_trials < 1:
        raise TuningError(f"n_trials must be >= 1, got {n_trials}")
    rng = np.random.default_rng(seed)
    trials: list[TrialResult] = []
    best: TrialResult | None = None
    for t in range(n_trials):
        params = space.sample(rng)
        result = TrialResult(trial=t, params=params)
        try:
            for fold in range(folds.k):
                train_rows, val_rows = folds.fold_indices(fold)
                model = trainer(params, X[train_rows], y[train_rows])
                scores = model.predict_proba(X[val_rows])
                result.fold_f1.append(f1_score(y[val_rows], scores, threshold))
            result.mean_f1 = float(np.mean(result.fold_f1))
        except Exception as exc:  # noqa: BLE001 - trial isolation by contract
            result.status = "failed"
            result.error = f"{type(exc).__name__}: {exc}"
            trials.append(result)
            continue
        trials.append(result)
        if best is None or result.mean_f1 > best.mean_f1:
            best = result
    if best is None:
        raise TuningError("all search trials failed")
    return SearchResult(
        best_params=best.params,
        best_score=best.mean_f1,
        best_trial=best.trial,
        trials=trials,
    )
