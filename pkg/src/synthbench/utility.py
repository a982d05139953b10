"""Analytical utility (log-odds-ratio recovery) and predictive utility
(TRTR / TSTR / TSRTR logistic-regression AUC and accuracy)."""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ._random import make_rng
from .corpus.types import PhenotypeMatrix, Vocabulary
from .exceptions import ConfigError, DataError, UndefinedInputError, VocabularyMismatchError
from .ml.logistic import LogisticRegression, fit_logistic
from .ml.metrics import accuracy, auc, spearman
from .ml.model_selection import train_test_split

Z_95 = 1.96
DEFAULT_OUTCOME = "CV_401"
SCENARIOS = ("trtr", "tstr", "tsrtr")


@dataclass(frozen=True)
class OutcomeSpec:
    """A single code, or every code starting with ``prefix``."""

    code: str | None = None
    prefix: str | None = None

    def __post_init__(self):
        if (self.code is None) == (self.prefix is None):
            raise ConfigError("OutcomeSpec needs exactly one of code or prefix")

    @classmethod
    def parse(cls, text) -> "OutcomeSpec":
        """``"EM_202"`` -> single code; ``"CA*"`` or ``"prefix:CA"`` -> prefix match."""
        if isinstance(text, OutcomeSpec):
            return text
        text = str(text).strip()
        if text.startswith("prefix:"):
            return cls(prefix=text[len("prefix:"):])
        if text.endswith("*"):
            return cls(prefix=text[:-1])
        return cls(code=text)

    def resolve(self, vocabulary: Vocabulary) -> list[int]:
        if self.code is not None:
            cols = [vocabulary.get(self.code)] if self.code in vocabulary else []
        else:
            cols = [j for j, c in enumerate(vocabulary) if c.startswith(self.prefix)]
        if not cols:
            raise ConfigError(f"outcome {self} matches no vocabulary column")
        return cols

    def __str__(self) -> str:
        return self.code if self.code is not None else f"{self.prefix}*"


@dataclass
class AnalyticalResult:
    outcome: str
    predictor: str
    beta_hat: float | None
    se: float | None
    ci_low: float | None
    ci_high: float | None
    converged: bool
    failure_reason: str | None = None
    table: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome,
            "predictor": self.predictor,
            "beta_hat": self.beta_hat,
            "se": self.se,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "converged": self.converged,
            "failure_reason": self.failure_reason,
            "table": self.table,
        }


def _column(matrix: PhenotypeMatrix, j) -> np.ndarray:
    return np.asarray(matrix.sparse[:, j].toarray()).ravel().astype(np.int64)


def analytical_utility(matrix: PhenotypeMatrix, outcome, predictor: str, z: float = Z_95) -> AnalyticalResult:
    """Unpenalised bivariate logistic regression of outcome on one predictor code.

    The outcome is the OR over the columns the spec resolves to. Returns the
    log-odds ratio with a Wald interval, or a ``failure_reason`` when the
    2x2 table makes the estimate undefined (single class, empty cell).
    """
    spec = OutcomeSpec.parse(outcome)
    vocab = matrix.vocabulary
    out_cols = spec.resolve(vocab)
    if predictor not in vocab:
        raise ConfigError(f"predictor {predictor!r} not in vocabulary")
    p_col = vocab.index(predictor)
    if p_col in out_cols:
        raise ConfigError(f"predictor {predictor!r} is one of the outcome columns")
    if matrix.n_rows == 0:
        raise UndefinedInputError("analytical utility on an empty matrix")

    y = (matrix.sparse[:, out_cols].sum(axis=1).A.ravel() > 0).astype(np.int64)
    x = _column(matrix, p_col)
    table = {
        "x1_y1": int(np.sum((x == 1) & (y == 1))),
        "x1_y0": int(np.sum((x == 1) & (y == 0))),
        "x0_y1": int(np.sum((x == 0) & (y == 1))),
        "x0_y0": int(np.sum((x == 0) & (y == 0))),
    }
    base = dict(outcome=str(spec), predictor=predictor, table=table)

    def failed(reason):
        return AnalyticalResult(beta_hat=None, se=None, ci_low=None, ci_high=None,
                                converged=False, failure_reason=reason, **base)

    if y.min() == y.max():
        return failed("single-class outcome")
    if x.min() == x.max():
        return failed("constant predictor")
    model = fit_logistic(x.reshape(-1, 1), y, reg=0.0)
    empty = [k for k, v in table.items() if v == 0]
    if empty or model.separation or not model.converged or model.standard_errors is None:
        reason = "separation/positivity"
        if empty:
            reason += f": empty cell(s) {', '.join(empty)}"
        elif not model.converged:
            reason += ": fit did not converge"
        return failed(reason)
    beta = float(model.coef[0])
    se = float(model.standard_errors[0])
    return AnalyticalResult(beta_hat=beta, se=se, ci_low=beta - z * se, ci_high=beta + z * se,
                            converged=True, **base)


@dataclass
class PredictiveResult:
    outcome: str
    auc_trtr: float | None = None
    acc_trtr: float | None = None
    auc_tstr: float | None = None
    acc_tstr: float | None = None
    auc_tsrtr: float | None = None
    acc_tsrtr: float | None = None
    failures: dict = field(default_factory=dict)
    n_train: int = 0
    n_test: int = 0
    n_syn: int = 0
    stratified: bool = True

    @staticmethod
    def _diff(a, b):
        return None if a is None or b is None else a - b

    @property
    def deltas(self) -> dict:
        return {
            "auc_tstr_minus_trtr": self._diff(self.auc_tstr, self.auc_trtr),
            "acc_tstr_minus_trtr": self._diff(self.acc_tstr, self.acc_trtr),
            "auc_tsrtr_minus_trtr": self._diff(self.auc_tsrtr, self.auc_trtr),
            "acc_tsrtr_minus_trtr": self._diff(self.acc_tsrtr, self.acc_trtr),
        }

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome,
            "auc_trtr": self.auc_trtr,
            "acc_trtr": self.acc_trtr,
            "auc_tstr": self.auc_tstr,
            "acc_tstr": self.acc_tstr,
            "auc_tsrtr": self.auc_tsrtr,
            "acc_tsrtr": self.acc_tsrtr,
            "deltas": self.deltas,
            "failures": dict(self.failures),
            "n_train": self.n_train,
            "n_test": self.n_test,
            "n_syn": self.n_syn,
            "stratified_split": self.stratified,
        }


def _check_shared(real: PhenotypeMatrix, syn: PhenotypeMatrix):
    if not isinstance(real, PhenotypeMatrix) or not isinstance(syn, PhenotypeMatrix):
        raise DataError("predictive utility expects PhenotypeMatrix inputs")
    if real.vocabulary != syn.vocabulary:
        raise VocabularyMismatchError("real and synthetic vocabularies differ")


def _xy(matrix: PhenotypeMatrix, out_col: int):
    csr = matrix.sparse
    y = np.asarray(csr[:, out_col].toarray()).ravel().astype(np.int64)
    keep = np.setdiff1d(np.arange(matrix.n_codes), [out_col])
    return sp.csr_matrix(csr[:, keep], dtype=np.float64), y


def predictive_utility(
    real: PhenotypeMatrix,
    syn: PhenotypeMatrix,
    outcome: str = DEFAULT_OUTCOME,
    test_fraction: float = 0.2,
    seed: int = 0,
    stratify: bool = True,
    reg="auto",
    scenarios=SCENARIOS,
    n_jobs=None,
) -> PredictiveResult:
    """TRTR / TSTR / TSRTR comparison for predicting one code from the rest.

    The real data is split once (4:1 by default). TRTR trains on the real
    training split, TSTR on all synthetic rows, TSRTR on both stacked; all
    are scored on the same real test split. The outcome column is never a
    predictor. A scenario whose training labels have a single class is
    recorded in ``failures`` instead of raising.
    """
    _check_shared(real, syn)
    if outcome not in real.vocabulary:
        raise ConfigError(f"outcome {outcome!r} not in vocabulary")
    if real.n_rows < 10:
        raise DataError(f"predictive utility needs at least 10 real rows, got {real.n_rows}")
    bad = set(scenarios) - set(SCENARIOS)
    if bad:
        raise ConfigError(f"unknown scenarios {sorted(bad)}")
    out_col = real.vocabulary.index(outcome)
    Xr, yr = _xy(real, out_col)
    Xs, ys = _xy(syn, out_col)
    train, test = train_test_split(yr, test_fraction, seed, stratify)
    result = PredictiveResult(outcome=outcome, n_train=len(train), n_test=len(test),
                              n_syn=syn.n_rows, stratified=stratify)
    X_test, y_test = Xr[test], yr[test]
    if y_test.min() == y_test.max():
        for s in scenarios:
            result.failures[s] = "single-class outcome in real test split"
        return result

    design = {
        "trtr": lambda: (Xr[train], yr[train]),
        "tstr": lambda: (Xs, ys),
        "tsrtr": lambda: (sp.vstack([Xr[train], Xs], format="csr"), np.concatenate([yr[train], ys])),
    }

    def run(name):
        X, y = design[name]()
        if y.shape[0] == 0 or y.min() == y.max():
            return name, None, None, "single-class outcome in training data"
        clf = LogisticRegression(reg=reg)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            clf.fit(X, y)
        p = clf.predict_proba(X_test)[:, 1]
        return name, auc(p, y_test), accuracy(p, y_test), None

    todo = [s for s in SCENARIOS if s in scenarios]
    if n_jobs and n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            outputs = list(pool.map(run, todo))
    else:
        outputs = [run(s) for s in todo]
    for name, a, c, fail in outputs:
        setattr(result, f"auc_{name}", a)
        setattr(result, f"acc_{name}", c)
        if fail:
            result.failures[name] = fail
    return result


@dataclass
class SweepResult:
    rows: list[dict]
    spearman_rho: float | None
    min_prev: float
    n_eligible: int

    def to_dict(self) -> dict:
        return {
            "rows": self.rows,
            "spearman_rho": self.spearman_rho,
            "min_prev": self.min_prev,
            "n_eligible": self.n_eligible,
        }


def sweep_spearman(rows, metric: str = "auc_tstr") -> float | None:
    pairs = [(r["prevalence"], r[metric]) for r in rows if r.get(metric) is not None]
    if len(pairs) < 2:
        return None
    rho = spearman([p for p, _ in pairs], [m for _, m in pairs])
    return None if np.isnan(rho) else rho


def per_code_tstr_sweep(
    real: PhenotypeMatrix,
    syn: PhenotypeMatrix,
    codes=None,
    min_prev: float = 0.1,
    n_codes: int = 20,
    seed: int = 0,
    include_trtr: bool = True,
    **kwargs,
) -> SweepResult:
    """Repeat TSTR with each of ``n_codes`` randomly chosen codes as outcome.

    Eligible codes have real prevalence strictly above ``min_prev`` (and are
    in ``codes`` when given). Rows come back in vocabulary order together
    with Spearman's rho between TSTR AUC and prevalence.
    """
    _check_shared(real, syn)
    prev = real.column_counts() / max(real.n_rows, 1)
    vocab = real.vocabulary
    pool = range(len(vocab)) if codes is None else [vocab.index(c) for c in codes]
    eligible = [j for j in pool if prev[j] > min_prev]
    if len(eligible) < n_codes:
        raise DataError(
            f"only {len(eligible)} codes have prevalence > {min_prev}; {n_codes} requested"
        )
    rng = make_rng(seed, "tstr_sweep")
    chosen = sorted(rng.choice(np.asarray(eligible), size=n_codes, replace=False).tolist())
    scen = ("trtr", "tstr") if include_trtr else ("tstr",)
    rows = []
    for j in chosen:
        res = predictive_utility(real, syn, vocab[j], seed=seed, scenarios=scen, **kwargs)
        rows.append({
            "code": vocab[j],
            "prevalence": float(prev[j]),
            "auc_tstr": res.auc_tstr,
            "auc_trtr": res.auc_trtr,
            "failure": res.failures.get("tstr"),
        })
    return SweepResult(rows, sweep_spearman(rows), min_prev, len(eligible))
