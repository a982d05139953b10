"""Shared model-fitting machinery: logistic regression, metrics, CV folds."""

from .logistic import (
    LogisticModel,
    LogisticRegression,
    fit_logistic,
    penalized_gradient,
    penalized_objective,
    predict_proba,
)
from .metrics import accuracy, auc, confusion_counts, f1, f1_from_counts, precision_recall, spearman
from .model_selection import FoldPlan, stratified_group_kfold, stratified_kfold, train_test_split

__all__ = [
    "FoldPlan",
    "LogisticModel",
    "LogisticRegression",
    "accuracy",
    "auc",
    "confusion_counts",
    "f1",
    "f1_from_counts",
    "fit_logistic",
    "penalized_gradient",
    "penalized_objective",
    "precision_recall",
    "predict_proba",
    "spearman",
    "stratified_group_kfold",
    "stratified_kfold",
    "train_test_split",
]
