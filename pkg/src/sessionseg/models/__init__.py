"""Supervised boundary classifiers: GBDT, logistic regression, kernel SVM."""

from sessionseg.models.gbdt import GbdtConfig, GbdtModel, fit_gbdt
from sessionseg.models.logreg import LinearModelConfig, LogRegModel, fit_logreg
from sessionseg.models.svm import SvmConfig, SvmModel, fit_svm
from sessionseg.models.serialize import ModelError, load_model, predict_proba, save_model

__all__ = [
    "GbdtConfig",
    "GbdtModel",
    "fit_gbdt",
    "LinearModelConfig",
    "LogRegModel",
    "fit_logreg",
    "SvmConfig",
    "SvmModel",
    "fit_svm",
    "ModelError",
    "load_model",
    "predict_proba",
    "save_model",
]
