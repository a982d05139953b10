"""Classification metrics and rank correlation."""

from __future__ import annotations

import numpy as np
from scipy.stats import rankdata

from ..exceptions import DataError, UndefinedInputError


def _pair(a, b, name_a, name_b):
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    if a.shape[0] != b.shape[0]:
        raise DataError(f"{name_a} has length {a.shape[0]} but {name_b} has {b.shape[0]}")
    if a.shape[0] == 0:
        raise DataError(f"{name_a} is empty")
    return a, b


def auc(scores, labels) -> float:
    """ROC AUC in Mann-Whitney form: P(score_pos > score_neg) with ties counted 1/2."""
    scores, labels = _pair(scores, labels, "scores", "labels")
    labels = labels.astype(bool)
    n_pos = int(labels.sum())
    n_neg = labels.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedInputError("AUC is undefined when labels contain a single class")
    ranks = rankdata(scores, method="average")
    u = ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def accuracy(scores, labels, threshold: float = 0.5) -> float:
    """Fraction correct when predicting 1 iff ``score > threshold`` (ties -> 0)."""
    scores, labels = _pair(scores, labels, "scores", "labels")
    pred = scores > threshold
    return float(np.mean(pred == labels.astype(bool)))


def confusion_counts(pred, truth) -> tuple[int, int, int, int]:
    """(TP, FP, FN, TN) for binary vectors."""
    pred, truth = _pair(pred, truth, "pred", "truth")
    pred = pred.astype(bool)
    truth = truth.astype(bool)
    tp = int(np.sum(pred & truth))
    fp = int(np.sum(pred & ~truth))
    fn = int(np.sum(~pred & truth))
    tn = int(np.sum(~pred & ~truth))
    return tp, fp, fn, tn


def f1_from_counts(tp: int, fp: int, fn: int) -> float:
    denom = 2 * tp + fp + fn
    return 0.0 if denom == 0 or tp == 0 else 2.0 * tp / denom


def f1(pred, truth) -> float:
    """Binary F1 = 2PR / (P + R); 0 when there are no true positives."""
    tp, fp, fn, _ = confusion_counts(pred, truth)
    return f1_from_counts(tp, fp, fn)


def precision_recall(pred, truth) -> tuple[float, float]:
    tp, fp, fn, _ = confusion_counts(pred, truth)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return precision, recall


def spearman(x, y) -> float:
    """Spearman's rho with average ranks for ties (NaN if either side is constant)."""
    x, y = _pair(x, y, "x", "y")
    rx = rankdata(x, method="average")
    ry = rankdata(y, method="average")
    rx = rx - rx.mean()
    ry = ry - ry.mean()
    denom = np.sqrt((rx @ rx) * (ry @ ry))
    if denom == 0:
        return float("nan")
    return float((rx @ ry) / denom)
