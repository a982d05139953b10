"""Distributional fidelity between a real and a synthetic phenotype matrix.

``mmd_max`` here is the largest absolute difference in code prevalence,
not a kernel maximum mean discrepancy.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ._validation import as_binary_array, check_paired, unique_rows
from .corpus.types import PhenotypeMatrix
from .exceptions import DataError, UndefinedInputError
from .ml.logistic import LogisticRegression
from .ml.metrics import accuracy, auc
from .ml.model_selection import stratified_group_kfold

RMSPE_SCALE = 100.0
COFD_SCALE = 1000.0


def _prev(X: np.ndarray) -> np.ndarray:
    return X.sum(axis=0, dtype=np.int64) / X.shape[0]


def mmd_max(real, syn) -> float:
    """max_k |prev_syn[k] - prev_real[k]|."""
    R, S, _ = check_paired(real, syn)
    if R.shape[1] == 0:
        raise UndefinedInputError("no codes to compare")
    return float(np.max(np.abs(_prev(S) - _prev(R))))


@dataclass(frozen=True)
class PercentageErrors:
    rmspe_raw: float
    mape: float
    excluded_codes: list[str]

    @property
    def rmspe_reported(self) -> float:
        return self.rmspe_raw / RMSPE_SCALE


def percentage_errors(real, syn) -> PercentageErrors:
    """RMSPE and MAPE of synthetic vs real prevalence, in percent.

    Codes with zero real prevalence are excluded (and listed); the averages
    run over the surviving codes only.
    """
    R, S, codes = check_paired(real, syn)
    pr, ps = _prev(R), _prev(S)
    keep = pr > 0
    excluded = [codes[j] for j in np.flatnonzero(~keep)]
    if not keep.any():
        raise UndefinedInputError("every code has zero real prevalence; RMSPE/MAPE undefined")
    rel = (ps[keep] - pr[keep]) / pr[keep]
    rmspe_raw = 100.0 * float(np.sqrt(np.mean(rel**2)))
    mape = 100.0 * float(np.mean(np.abs(rel)))
    return PercentageErrors(rmspe_raw, mape, excluded)


def rmspe(real, syn, reported: bool = True) -> float:
    """Root mean squared percentage error; ``reported`` divides by 100."""
    pe = percentage_errors(real, syn)
    return pe.rmspe_reported if reported else pe.rmspe_raw


def mape(real, syn) -> float:
    return percentage_errors(real, syn).mape


def cooccurrence_matrix(X) -> np.ndarray:
    """B = X^T X as int64: patients having both code k and code k'."""
    if isinstance(X, PhenotypeMatrix):
        csr = sp.csr_matrix(X.sparse, dtype=np.int64)
    else:
        csr = sp.csr_matrix(as_binary_array(X, allow_empty=True), dtype=np.int64)
    return np.asarray((csr.T @ csr).toarray(), dtype=np.int64)


def correlation_matrix(X) -> tuple[np.ndarray, np.ndarray]:
    """Pearson correlation of binary columns plus the indices of constant columns.

    Computed from integer counts: ``r = (N B_kl - S_k S_l) / sqrt(v_k v_l)``
    with ``v_k = N S_k - S_k^2``. Entries involving a constant column are 0;
    the diagonal is always 1.
    """
    arr = as_binary_array(X, allow_empty=True)
    n = arr.shape[0]
    if arr.shape[1] == 0:
        raise UndefinedInputError("correlation of a matrix with no columns")
    if n == 0:
        raise UndefinedInputError("correlation of a matrix with no rows")
    B = cooccurrence_matrix(arr)
    s = np.diag(B).copy()
    num = n * B - np.outer(s, s)
    var = n * s - s * s
    constant = np.flatnonzero(var == 0)
    sd = np.sqrt(var.astype(np.float64))
    with np.errstate(divide="ignore", invalid="ignore"):
        corr = num / np.outer(sd, sd)
    corr[constant, :] = 0.0
    corr[:, constant] = 0.0
    np.fill_diagonal(corr, 1.0)
    return corr, constant


def correlation_fd(real, syn, return_diagnostics: bool = False):
    """Frobenius norm of the difference of the two Pearson correlation matrices."""
    R, S, codes = check_paired(real, syn)
    cr, const_r = correlation_matrix(R)
    cs, const_s = correlation_matrix(S)
    value = float(np.sqrt(np.sum((cr - cs) ** 2)))
    if return_diagnostics:
        return value, {
            "constant_real": [codes[j] for j in const_r],
            "constant_syn": [codes[j] for j in const_s],
        }
    return value


def cooccurrence_fd(real, syn, reported: bool = True) -> float:
    """Frobenius norm of ``X_real^T X_real - X_syn^T X_syn``; ``reported`` divides by 1000."""
    if isinstance(real, PhenotypeMatrix) and isinstance(syn, PhenotypeMatrix):
        if real.vocabulary != syn.vocabulary:
            check_paired(real, syn)
        br, bs = cooccurrence_matrix(real), cooccurrence_matrix(syn)
    else:
        R, S, _ = check_paired(real, syn)
        br, bs = cooccurrence_matrix(R), cooccurrence_matrix(S)
    diff = (br - bs).astype(np.float64)
    raw = float(np.sqrt(np.sum(diff * diff)))
    return raw / COFD_SCALE if reported else raw


def _stack(real, syn):
    if isinstance(real, PhenotypeMatrix) and isinstance(syn, PhenotypeMatrix):
        return sp.vstack([real.sparse, syn.sparse], format="csr").astype(np.float64)
    R, S, _ = check_paired(real, syn)
    return sp.csr_matrix(np.vstack([R, S]), dtype=np.float64)


def discriminative_prediction(
    real, syn, k_folds: int = 5, seed: int = 0, reg="auto", n_jobs=None
) -> dict:
    """Cross-validated real-vs-synthetic classifier.

    Real rows are labelled 1 and synthetic rows 0. A logistic regression on
    all codes is trained per stratified fold; returns mean held-out AUC and
    ACC plus the per-fold values. Values near 0.5 mean indistinguishable.

    Identical row vectors always share a fold. Otherwise a held-out real
    row whose synthetic copy sits in the training folds (with the opposite
    label) is scored systematically low, pushing the AUC of a perfect copy
    far below 0.5.
    """
    R, S, _ = check_paired(real, syn)
    X = _stack(real, syn)
    y = np.concatenate([np.ones(R.shape[0], dtype=np.int64), np.zeros(S.shape[0], dtype=np.int64)])
    _, _, groups = unique_rows(np.vstack([R, S]))
    plan = stratified_group_kfold(y, groups, k_folds, seed)

    def run(fold):
        train, test = fold
        clf = LogisticRegression(reg=reg)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            clf.fit(X[train], y[train])
        p = clf.predict_proba(X[test])[:, 1]
        return auc(p, y[test]), accuracy(p, y[test])

    folds = list(plan.split())
    if n_jobs and n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(run, folds))
    else:
        results = [run(f) for f in folds]
    aucs = [r[0] for r in results]
    accs = [r[1] for r in results]
    return {
        "auc": float(np.mean(aucs)),
        "acc": float(np.mean(accs)),
        "fold_auc": aucs,
        "fold_acc": accs,
    }


@dataclass
class FidelityResult:
    mmd: float
    rmspe_reported: float
    mape: float
    cfd: float
    cofd_reported: float
    disc_auc: float | None = None
    disc_acc: float | None = None
    excluded_codes: list[str] = field(default_factory=list)
    rmspe_raw: float = 0.0
    cofd_raw: float = 0.0
    constant_columns: dict = field(default_factory=dict)
    per_code_prevalence_pairs: list[dict] | None = None

    def to_dict(self, include_pairs: bool = False) -> dict:
        d = {
            "mmd": self.mmd,
            "rmspe": self.rmspe_reported,
            "rmspe_raw": self.rmspe_raw,
            "mape": self.mape,
            "cfd": self.cfd,
            "cofd": self.cofd_reported,
            "cofd_raw": self.cofd_raw,
            "disc_auc": self.disc_auc,
            "disc_acc": self.disc_acc,
            "excluded_codes": list(self.excluded_codes),
            "constant_columns": self.constant_columns,
        }
        if include_pairs and self.per_code_prevalence_pairs is not None:
            d["per_code_prevalence_pairs"] = self.per_code_prevalence_pairs
        return d


def evaluate_fidelity(
    real,
    syn,
    k_folds: int = 5,
    seed: int = 0,
    discriminator: bool = True,
    reg="auto",
    n_jobs=None,
    prevalence_pairs: bool = False,
) -> FidelityResult:
    """Run the full fidelity battery."""
    R, S, codes = check_paired(real, syn)
    if R.shape[1] == 0:
        raise DataError("no codes to evaluate")
    pe = percentage_errors(real, syn)
    cfd, diag = correlation_fd(real, syn, return_diagnostics=True)
    cofd_raw = cooccurrence_fd(real, syn, reported=False)
    disc = discriminative_prediction(real, syn, k_folds, seed, reg, n_jobs) if discriminator else {}
    pairs = None
    if prevalence_pairs:
        pr, ps = _prev(R), _prev(S)
        pairs = [
            {"code": c, "real": float(a), "syn": float(b)} for c, a, b in zip(codes, pr, ps)
        ]
    return FidelityResult(
        mmd=mmd_max(real, syn),
        rmspe_reported=pe.rmspe_reported,
        mape=pe.mape,
        cfd=cfd,
        cofd_reported=cofd_raw / COFD_SCALE,
        disc_auc=disc.get("auc"),
        disc_acc=disc.get("acc"),
        excluded_codes=pe.excluded_codes,
        rmspe_raw=pe.rmspe_raw,
        cofd_raw=cofd_raw,
        constant_columns=diag,
        per_code_prevalence_pairs=pairs,
    )
