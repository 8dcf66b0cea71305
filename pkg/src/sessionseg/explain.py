"""Per-prediction attributions and aggregated feature importance.

Tree ensembles get exact Shapley values in polynomial time.  Two
conditioning modes exist: ``path`` (the default) weights unvisited
branches by their training cover, and ``interventional`` marginalizes
features against an explicit background sample.  Both satisfy local
accuracy: contributions plus the base value reconstruct the raw margin.
Linear models use the exact weight * (x - mean) decomposition; the RBF
SVM gets a gradient-based surrogate that is flagged approximate.

Feature labels follow the window layout: ``(L_i,R_j):<kind>`` pairs the
i-th item left of the gap with the j-th item right of it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from sessionseg.features import feature_labels, n_features
from sessionseg.models.gbdt import GbdtModel, Tree
from sessionseg.models.logreg import LogRegModel
from sessionseg.models.svm import SvmModel


class ExplainError(ValueError):
    """Raised for unsupported model kinds or shape mismatches."""


@dataclass
class Attribution:
    """Per-feature contributions to one prediction's raw margin."""

    contributions: np.ndarray
    base_value: float
    mode: str
    approximate: bool = False

    @property
    def margin(self) -> float:
        return float(self.contributions.sum() + self.base_value)


@dataclass
class ImportanceReport:
    """Mean |contribution| per feature, ranked non-increasing."""

    labels: list[str]
    importance: np.ndarray
    ranking: list[tuple[str, float]] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.ranking:
            order = np.argsort(-self.importance, kind="mergesort")
            self.ranking = [
                (self.labels[i], float(self.importance[i])) for i in order
            ]


def _tree_expected_value(tree: Tree) -> float:
    """Cover-weighted mean leaf value (the path-dependent E[f])."""

    def rec(node: int) -> float:
        if tree.feature[node] < 0:
            return float(tree.value[node])
        left, right = tree.left[node], tree.right[node]
        cl, cr = tree.cover[left], tree.cover[right]
        return (cl * rec(left) + cr * rec(right)) / (cl + cr)

    return rec(0)


class _Path:
    """The unique-feature path bookkeeping of the tree walk."""

    def __init__(self) -> None:
        self.d: list[int] = []
        self.z: list[float] = []
        self.o: list[float] = []
        self.w: list[float] = []

    def copy(self) -> "_Path":
        p = _Path.__new__(_Path)
        p.d = self.d.copy()
        p.z = self.z.copy()
        p.o = self.o.copy()
        p.w = self.w.copy()
        return p

    def extend(self, pz: float, po: float, pi: int) -> None:
        depth = len(self.d)
        self.d.append(pi)
        self.z.append(pz)
        self.o.append(po)
        self.w.append(1.0 if depth == 0 else 0.0)
        for i in range(depth - 1, -1, -1):
            self.w[i + 1] += po * self.w[i] * (i + 1) / (depth + 1)
            self.w[i] = pz * self.w[i] * (depth - i) / (depth + 1)

    def unwind(self, index: int) -> None:
        depth = len(self.d) - 1
        po, pz = self.o[index], self.z[index]
        carry = self.w[depth]
        for i in range(depth - 1, -1, -1):
            if po != 0.0:
                tmp = self.w[i]
                self.w[i] = carry * (depth + 1) / ((i + 1) * po)
                carry = tmp - self.w[i] * pz * (depth - i) / (depth + 1)
            else:
                self.w[i] = self.w[i] * (depth + 1) / (pz * (depth - i))
        for i in range(index, depth):
            self.d[i] = self.d[i + 1]
            self.z[i] = self.z[i + 1]
            self.o[i] = self.o[i + 1]
        del self.d[-1], self.z[-1], self.o[-1], self.w[-1]

    def unwound_sum(self, index: int) -> float:
        depth = len(self.d) - 1
        po, pz = self.o[index], self.z[index]
        carry = self.w[depth]
        total = 0.0
        for i in range(depth - 1, -1, -1):
            if po != 0.0:
                tmp = carry * (depth + 1) / ((i + 1) * po)
                total += tmp
                carry = self.w[i] - tmp * pz * (depth - i) / (depth + 1)
            else:
                total += self.w[i] * (depth + 1) / (pz * (depth - i))
        return total


def _tree_shap_path(tree: Tree, x: np.ndarray, phi: np.ndarray) -> None:
    """Accumulate one tree's path-dependent Shapley values into phi."""

    def recurse(node: int, path: _Path, pz: float, po: float, pi: int) -> None:
        path = path.copy()
        path.extend(pz, po, pi)
        if tree.feature[node] < 0:
            for i in range(1, len(path.d)):
                w = path.unwound_sum(i)
                phi[path.d[i]] += w * (path.o[i] - path.z[i]) * tree.value[node]
            return
        feat = int(tree.feature[node])
        left, right = int(tree.left[node]), int(tree.right[node])
        hot, cold = (left, right) if x[feat] <= tree.threshold[node] else (right, left)
        inc_z = inc_o = 1.0
        if feat in path.d[1:]:
            k = path.d.index(feat, 1)
            inc_z, inc_o = path.z[k], path.o[k]
            path.unwind(k)
        cover = tree.cover[node]
        recurse(hot, path, inc_z * tree.cover[hot] / cover, inc_o, feat)
        recurse(cold, path, inc_z * tree.cover[cold] / cover, 0.0, feat)

    recurse(0, _Path(), 1.0, 1.0, -1)


def _leaf_paths(tree: Tree) -> list[tuple[int, list[tuple[int, float, bool]]]]:
    """(leaf_node, [(feature, threshold, go_left), ...]) for every leaf."""
    paths: list[tuple[int, list[tuple[int, float, bool]]]] = []

    def rec(node: int, acc: list[tuple[int, float, bool]]) -> None:
        if tree.feature[node] < 0:
            paths.append((node, acc))
            return
        feat, thr = int(tree.feature[node]), float(tree.threshold[node])
        rec(int(tree.left[node]), acc + [(feat, thr, True)])
        rec(int(tree.right[node]), acc + [(feat, thr, False)])

    rec(0, [])
    return paths


def _tree_shap_interventional(
    tree: Tree, x: np.ndarray, z: np.ndarray, phi: np.ndarray
) -> None:
    """One tree, one background row: exact Shapley of the x/z hybrid game.

    Each leaf partitions the features on its path into those that must
    take x's value and those that must take z's; the leaf then enters
    the classic closed-form contribution for cube-indicator games.
    """
    for leaf, path in _leaf_paths(tree):
        x_ok: dict[int, bool] = {}
        z_ok: dict[int, bool] = {}
        for feat, thr, go_left in path:
            x_ok[feat] = x_ok.get(feat, True) and ((x[feat] <= thr) == go_left)
            z_ok[feat] = z_ok.get(feat, True) and ((z[feat] <= thr) == go_left)
        if any(not x_ok[f] and not z_ok[f] for f in x_ok):
            continue
        x_only = [f for f in x_ok if x_ok[f] and not z_ok[f]]
        z_only = [f for f in z_ok if z_ok[f] and not x_ok[f]]
        k, m = len(x_only), len(z_only)
        if k + m == 0:
            continue
        value = float(tree.value[leaf])
        denom = math.factorial(k + m)
        if k > 0:
            w_pos = math.factorial(k - 1) * math.factorial(m) / denom
            for f in x_only:
                phi[f] += value * w_pos
        if m > 0:
            w_neg = math.factorial(k) * math.factorial(m - 1) / denom
            for f in z_only:
                phi[f] -= value * w_neg


def tree_shap(
    model: GbdtModel,
    x: np.ndarray,
    background: np.ndarray | None = None,
    mode: str = "path",
) -> Attribution:
    """Exact Shapley attribution of a GBDT margin for one input row.

    ``path`` mode conditions on training covers and needs no background;
    ``interventional`` averages the hybrid-input game over background
    rows.
    """
    if not isinstance(model, GbdtModel):
        raise ExplainError(
            "tree_shap explains gbdt models only; use linear_shap for "
            "logistic regression and SVM"
        )
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.feature_dim,):
        raise ExplainError(f"x must have shape ({model.feature_dim},), got {x.shape}")
    phi = np.zeros(model.feature_dim)
    if mode == "path":
        base = model.base_margin
        for tree in model.trees:
            _tree_shap_path(tree, x, phi)
            base += _tree_expected_value(tree)
        return Attribution(contributions=phi, base_value=float(base), mode=mode)
    if mode == "interventional":
        if background is None or len(background) == 0:
            raise ExplainError("interventional mode requires a background set")
        background = np.asarray(background, dtype=np.float64)
        if background.ndim == 1:
            background = background[None, :]
        for z in background:
            for tree in model.trees:
                _tree_shap_interventional(tree, x, z, phi)
        phi /= background.shape[0]
        base = float(np.mean(model.predict_margin(background)))
        return Attribution(contributions=phi, base_value=base, mode=mode)
    raise ExplainError(f"unknown tree_shap mode {mode!r}")


def linear_shap(model, x: np.ndarray, background_mean: np.ndarray) -> Attribution:
    """Exact linear attribution w_j (x_j - mean_j); surrogate for RBF SVM."""
    x = np.asarray(x, dtype=np.float64)
    mean = np.asarray(background_mean, dtype=np.float64)
    if x.shape != mean.shape or x.shape != (model.feature_dim,):
        raise ExplainError(
            f"x and background_mean must have shape ({model.feature_dim},)"
        )
    if isinstance(model, LogRegModel):
        phi = model.weights * (x - mean)
        base = float(model.weights @ mean + model.bias)
        return Attribution(contributions=phi, base_value=base, mode="linear")
    if isinstance(model, SvmModel):
        grad = model.margin_gradient(x)
        phi = grad * (x - mean)
        base = float(model.decision_function(mean[None, :])[0])
        return Attribution(
            contributions=phi, base_value=base, mode="linear-surrogate",
            approximate=True,
        )
    raise ExplainError(
        "linear_shap explains logreg and svm models; use tree_shap for gbdt"
    )


def aggregate_importance(
    attributions: Sequence[Attribution] | np.ndarray, w: int
) -> ImportanceReport:
    """Mean absolute contribution per feature with (L_i,R_j) pair labels."""
    if isinstance(attributions, np.ndarray):
        matrix = attributions
    else:
        if not attributions:
            raise ExplainError("need at least one attribution to aggregate")
        matrix = np.vstack([a.contributions for a in attributions])
    expected = n_features(w)
    if matrix.shape[1] != expected:
        raise ExplainError(
            f"attributions have {matrix.shape[1]} features, "
            f"w={w} implies {expected}"
        )
    importance = np.mean(np.abs(matrix), axis=0)
    return ImportanceReport(labels=feature_labels(w), importance=importance)


def brute_force_shap(
    model: GbdtModel,
    x: np.ndarray,
    background: np.ndarray,
    mode: str = "interventional",
) -> np.ndarray:
    """Exhaustive Shapley values over all feature coalitions.

    Exponential in the feature count; the independent oracle for
    verifying :func:`tree_shap` on small models.
    """
    x = np.asarray(x, dtype=np.float64)
    background = np.asarray(background, dtype=np.float64)
    if background.ndim == 1:
        background = background[None, :]
    M = model.feature_dim

    if mode == "interventional":

        def v(subset: frozenset[int]) -> float:
            hybrid = background.copy()
            cols = list(subset)
            hybrid[:, cols] = x[cols]
            return float(np.mean(model.predict_margin(hybrid)))

    elif mode == "path":

        def cond_exp(tree: Tree, node: int, subset: frozenset[int]) -> float:
            if tree.feature[node] < 0:
                return float(tree.value[node])
            feat = int(tree.feature[node])
            left, right = int(tree.left[node]), int(tree.right[node])
            if feat in subset:
                nxt = left if x[feat] <= tree.threshold[node] else right
                return cond_exp(tree, nxt, subset)
            cl, cr = tree.cover[left], tree.cover[right]
            return (
                cl * cond_exp(tree, left, subset)
                + cr * cond_exp(tree, right, subset)
            ) / (cl + cr)

        def v(subset: frozenset[int]) -> float:
            return model.base_margin + sum(
                cond_exp(t, 0, subset) for t in model.trees
            )

    else:
        raise ExplainError(f"unknown brute-force mode {mode!r}")

    values = {
        frozenset(s): v(frozenset(s))
        for r in range(M + 1)
        for s in combinations(range(M), r)
    }
    phi = np.zeros(M)
    all_features = set(range(M))
    for i in range(M):
        others = all_features - {i}
        for r in range(M):
            weight = (
                math.factorial(r) * math.factorial(M - r - 1) / math.factorial(M)
            )
            for s in combinations(sorted(others), r):
                phi[i] += weight * (
                    values[frozenset(s) | {i}] - values[frozenset(s)]
                )
    return phi
