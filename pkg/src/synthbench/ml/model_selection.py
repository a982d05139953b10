"""Seeded stratified cross-validation folds and train/test splits."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterator

import numpy as np
from sklearn.model_selection import StratifiedGroupKFold

from .._random import derive_seed, make_rng
from ..exceptions import ConfigError, DataError


@dataclass(frozen=True)
class FoldPlan:
    """Fold index in ``[0, k)`` for each of ``n`` observations."""

    k: int
    assignments: np.ndarray

    def split(self) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        """Yield ``(train_idx, test_idx)`` for each fold in order."""
        for fold in range(self.k):
            test = np.flatnonzero(self.assignments == fold)
            train = np.flatnonzero(self.assignments != fold)
            yield train, test

    def fold_sizes(self) -> np.ndarray:
        return np.bincount(self.assignments, minlength=self.k)


def stratified_kfold(labels, k: int = 5, seed: int = 0) -> FoldPlan:
    """Per-class round-robin fold assignment after a seeded shuffle.

    Classes are dealt in sorted order and the round-robin position carries
    over between classes, so fold sizes differ by at most one overall and
    per-class counts differ by at most one between folds.
    """
    labels = np.asarray(labels).ravel()
    n = labels.shape[0]
    if k < 2:
        raise ConfigError("k must be >= 2")
    if k > n:
        raise DataError(f"cannot split {n} observations into {k} folds")
    rng = make_rng(seed, "stratified_kfold")
    assignments = np.empty(n, dtype=np.int64)
    offset = 0
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        if idx.shape[0] < k:
            warnings.warn(
                f"class {cls!r} has {idx.shape[0]} members, fewer than k={k} folds",
                UserWarning,
                stacklevel=2,
            )
        idx = rng.permutation(idx)
        assignments[idx] = (offset + np.arange(idx.shape[0])) % k
        offset = (offset + idx.shape[0]) % k
    return FoldPlan(k, assignments)


def stratified_group_kfold(labels, groups, k: int = 5, seed: int = 0) -> FoldPlan:
    """Stratified folds that never split a group across folds.

    Thin wrapper over scikit-learn's ``StratifiedGroupKFold`` with a
    shuffle seed derived from ``seed``. With all-distinct groups this is an
    ordinary stratified split.
    """
    labels = np.asarray(labels).ravel()
    groups = np.asarray(groups).ravel()
    if k < 2:
        raise ConfigError("k must be >= 2")
    if groups.shape != labels.shape:
        raise DataError("labels and groups differ in length")
    n_groups = np.unique(groups).shape[0]
    if k > n_groups:
        raise DataError(f"cannot split {n_groups} distinct groups into {k} folds")
    splitter = StratifiedGroupKFold(
        n_splits=k, shuffle=True, random_state=derive_seed(seed, "group_kfold") % 2**32
    )
    assignments = np.empty(labels.shape[0], dtype=np.int64)
    with warnings.catch_warnings():
        # a class smaller than k is legitimate here (e.g. one big duplicate group)
        warnings.simplefilter("ignore", UserWarning)
        for fold, (_, test) in enumerate(splitter.split(np.zeros(labels.shape[0]), labels, groups)):
            assignments[test] = fold
    return FoldPlan(k, assignments)


def train_test_split(labels, test_fraction: float = 0.2, seed: int = 0, stratify: bool = True):
    """Seeded split of ``range(len(labels))`` into sorted train/test index arrays.

    With ``stratify`` each class contributes ``round(n_class * test_fraction)``
    test rows; otherwise ``round(n * test_fraction)`` rows are drawn overall.
    """
    labels = np.asarray(labels).ravel()
    n = labels.shape[0]
    if not 0 < test_fraction < 1:
        raise ConfigError("test_fraction must lie in (0, 1)")
    rng = make_rng(seed, "train_test_split")
    test_parts = []
    if stratify:
        for cls in np.unique(labels):
            idx = rng.permutation(np.flatnonzero(labels == cls))
            test_parts.append(idx[: int(round(idx.shape[0] * test_fraction))])
    else:
        idx = rng.permutation(n)
        test_parts.append(idx[: int(round(n * test_fraction))])
    test = np.sort(np.concatenate(test_parts)) if test_parts else np.array([], dtype=np.intp)
    mask = np.ones(n, dtype=bool)
    mask[test] = False
    train = np.flatnonzero(mask)
    if train.shape[0] == 0 or test.shape[0] == 0:
        raise DataError(f"split of {n} rows left an empty train or test set")
    return train, test
