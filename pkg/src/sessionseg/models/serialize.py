"""Lossless model persistence with kind/version/layout checks.

Models are stored as a single JSON document under a versioned header.
Floats pass through ``repr`` (via json), so a load(save(model)) round
trip predicts bit-identically.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from sessionseg.fileio import read_header, write_header
from sessionseg.models.common import ModelError
from sessionseg.models.gbdt import GbdtConfig, GbdtModel, Tree
from sessionseg.models.logreg import LinearModelConfig, LogRegModel
from sessionseg.models.svm import SvmConfig, SvmModel


def predict_proba(model, x: np.ndarray) -> np.ndarray:
    """Boundary probability in [0, 1] for one row or a batch of rows."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    proba = model.predict_proba(x if not single else x[None, :])
    return float(proba[0]) if single else proba


def save_model(model, path: str | Path) -> None:
    if model.kind == "gbdt":
        params = {
            "config": model.config.__dict__,
            "base_margin": model.base_margin,
            "trees": [t.to_dict() for t in model.trees],
        }
    elif model.kind == "logreg":
        params = {
            "config": model.config.__dict__,
            "weights": model.weights.tolist(),
            "bias": model.bias,
        }
    elif model.kind == "svm":
        params = {
            "config": model.config.__dict__,
            "support_vectors": model.support_vectors.tolist(),
            "dual_coef": model.dual_coef.tolist(),
            "bias": model.bias,
            "platt_a": model.platt_a,
            "platt_b": model.platt_b,
        }
    else:
        raise ModelError(f"unknown model kind {model.kind!r}")
    doc = {
        "kind": model.kind,
        "feature_dim": model.feature_dim,
        "metadata": model.metadata,
        "params": params,
    }
    with open(path, "w", encoding="utf-8") as fh:
        write_header(fh, "model", 1, {"kind": model.kind})
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")


def load_model(path: str | Path):
    with open(path, encoding="utf-8") as fh:
        header = read_header(fh, "model", 1)
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelError(f"{path}: corrupt or truncated model file: {exc}") from exc
    kind = doc.get("kind")
    if kind != header.get("kind"):
        raise ModelError(f"{path}: header kind {header.get('kind')!r} != body {kind!r}")
    params = doc["params"]
    metadata = doc.get("metadata", {})
    feature_dim = int(doc["feature_dim"])
    if kind == "gbdt":
        return GbdtModel(
            config=GbdtConfig(**params["config"]),
            base_margin=float(params["base_margin"]),
            trees=[Tree.from_dict(t) for t in params["trees"]],
            feature_dim=feature_dim,
            metadata=metadata,
        )
    if kind == "logreg":
        return LogRegModel(
            config=LinearModelConfig(**params["config"]),
            weights=np.array(params["weights"], dtype=np.float64),
            bias=float(params["bias"]),
            feature_dim=feature_dim,
            metadata=metadata,
        )
    if kind == "svm":
        return SvmModel(
            config=SvmConfig(**params["config"]),
            support_vectors=np.array(params["support_vectors"], dtype=np.float64),
            dual_coef=np.array(params["dual_coef"], dtype=np.float64),
            bias=float(params["bias"]),
            platt_a=float(params["platt_a"]),
            platt_b=float(params["platt_b"]),
            feature_dim=feature_dim,
            metadata=metadata,
        )
    raise ModelError(f"{path}: unknown model kind {kind!r}")


def check_feature_compat(model, dataset_meta: dict) -> None:
    """Refuse to apply a model to features with a different w or layout."""
    model_w = model.metadata.get("w")
    data_w = dataset_meta.get("w")
    if model_w is not None and data_w is not None and model_w != data_w:
        raise ModelError(f"model trained with w={model_w}, features built with w={data_w}")
    model_layout = model.metadata.get("layout")
    data_layout = dataset_meta.get("layout")
    if (
        model_layout is not None
        and data_layout is not None
        and model_layout != data_layout
    ):
        raise ModelError(
            f"feature layout version mismatch: model {model_layout}, data {data_layout}"
        )
