"""L2-penalised logistic regression fitted by damped Newton / IRLS.

Objective (minimised)::

    f(b0, b) = sum_i [log(1 + exp(eta_i)) - y_i * eta_i] + (reg / 2) * ||b||^2
    eta_i    = b0 + x_i . b

The intercept is never penalised. Convergence is declared when the
infinity-norm of the gradient of ``f / n`` drops to ``tol``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.special import expit
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ..exceptions import DataError, SeparationError

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 100
#: |parameter| beyond which an unpenalised fit is flagged as separated
SEPARATION_BOUND = 20.0
#: default ridge strength per training row for high-dimensional fits
AUTO_REG_PER_ROW = 1e-4


@dataclass(frozen=True)
class LogisticModel:
    """Fitted coefficients plus convergence diagnostics.

    ``standard_errors`` / ``intercept_se`` are Wald standard errors from the
    inverse observed information; they are ``None`` unless the fit converged
    and the information matrix was invertible.
    """

    coef: np.ndarray
    intercept: float
    converged: bool
    separation: bool
    n_iter: int
    reg: float = 0.0
    standard_errors: np.ndarray | None = None
    intercept_se: float | None = None

    @property
    def n_features(self) -> int:
        return self.coef.shape[0]

    def confint(self, z: float = 1.96) -> np.ndarray | None:
        """(p, 2) Wald interval for the coefficients."""
        if self.standard_errors is None:
            return None
        half = z * self.standard_errors
        return np.column_stack([self.coef - half, self.coef + half])


def _as_design(X) -> np.ndarray | sp.csr_matrix:
    if sp.issparse(X):
        return sp.csr_matrix(X, dtype=np.float64)
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    return arr


def _split(params, fit_intercept):
    if fit_intercept:
        return params[0], params[1:]
    return 0.0, params


def _eta(X, params, fit_intercept):
    b0, b = _split(params, fit_intercept)
    if X.shape[1] == 0:
        return np.full(X.shape[0], float(b0))
    return np.asarray(X @ b).ravel() + b0


def penalized_objective(params, X, y, reg=0.0, fit_intercept=True) -> float:
    """Negative log-likelihood plus ridge penalty (intercept excluded)."""
    X = _as_design(X)
    y = np.asarray(y, dtype=np.float64)
    params = np.asarray(params, dtype=np.float64)
    eta = _eta(X, params, fit_intercept)
    _, b = _split(params, fit_intercept)
    return float(np.sum(np.logaddexp(0.0, eta) - y * eta) + 0.5 * reg * np.dot(b, b))


def penalized_gradient(params, X, y, reg=0.0, fit_intercept=True) -> np.ndarray:
    """Analytic gradient of :func:`penalized_objective`."""
    X = _as_design(X)
    y = np.asarray(y, dtype=np.float64)
    params = np.asarray(params, dtype=np.float64)
    return _gradient(X, y, params, reg, fit_intercept, expit(_eta(X, params, fit_intercept)))


def _gradient(X, y, params, reg, fit_intercept, prob):
    resid = prob - y
    _, b = _split(params, fit_intercept)
    g_b = np.asarray(X.T @ resid).ravel() + reg * b
    if fit_intercept:
        return np.concatenate([[resid.sum()], g_b])
    return g_b


def _hessian(X, w, reg, fit_intercept):
    p = X.shape[1]
    if sp.issparse(X):
        xtwx = (X.T @ X.multiply(w[:, None]).tocsr()).toarray()
    else:
        xtwx = (X * w[:, None]).T @ X
    xtwx[np.diag_indices(p)] += reg
    if not fit_intercept:
        return xtwx
    xtw = np.asarray(X.T @ w).ravel()
    H = np.empty((p + 1, p + 1))
    H[0, 0] = w.sum()
    H[0, 1:] = xtw
    H[1:, 0] = xtw
    H[1:, 1:] = xtwx
    return H


def _solve(H, g):
    try:
        step = np.linalg.solve(H, g)
        if np.all(np.isfinite(step)):
            return step
    except np.linalg.LinAlgError:
        pass
    return np.linalg.lstsq(H, g, rcond=None)[0]


def fit_logistic(
    X,
    y,
    reg: float = 0.0,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    fit_intercept: bool = True,
    separation_bound: float = SEPARATION_BOUND,
) -> LogisticModel:
    """Fit a logistic regression by damped Newton iterations.

    Parameters
    ----------
    X : array-like or sparse matrix, shape (n, p)
        Design matrix without the intercept column. ``p`` may be 0.
    y : array-like of 0/1, shape (n,)
    reg : float
        Ridge strength ``lambda >= 0``; the intercept is not penalised.
    tol : float
        Stop when ``max|grad f| / n <= tol``.
    max_iter : int
    fit_intercept : bool
    separation_bound : float
        For ``reg == 0``, any |parameter| above this while the objective is
        still decreasing marks the fit as separated (MLE at infinity).

    Raises
    ------
    SeparationError
        If ``y`` has a single class and ``X`` has feature columns.
    """
    X = _as_design(X)
    y = np.asarray(y, dtype=np.float64).ravel()
    n, p = X.shape
    if n < 1:
        raise DataError("fit_logistic needs at least one observation")
    if y.shape[0] != n:
        raise DataError(f"X has {n} rows but y has {y.shape[0]} labels")
    if not np.isin(y, (0.0, 1.0)).all():
        raise DataError("y must be binary 0/1")
    if reg < 0:
        raise DataError("reg must be >= 0")
    n_pos = int(y.sum())
    if p > 0 and n_pos in (0, n):
        raise SeparationError(
            f"outcome has a single class ({'all 1' if n_pos else 'all 0'}); "
            "coefficients are not identifiable"
        )

    params = np.zeros(p + 1 if fit_intercept else p)
    if fit_intercept:
        ybar = min(max(y.mean(), 1e-6), 1 - 1e-6)
        params[0] = np.log(ybar / (1 - ybar))

    converged = separation = False
    n_iter = 0
    obj = penalized_objective(params, X, y, reg, fit_intercept)
    for n_iter in range(max_iter + 1):
        prob = expit(_eta(X, params, fit_intercept))
        grad = _gradient(X, y, params, reg, fit_intercept, prob)
        if np.max(np.abs(grad), initial=0.0) / n <= tol:
            converged = True
            break
        if n_iter == max_iter:
            break
        H = _hessian(X, prob * (1 - prob), reg, fit_intercept)
        step = _solve(H, grad)
        slope = -float(grad @ step)
        t = 1.0
        for _ in range(50):
            cand = params - t * step
            cand_obj = penalized_objective(cand, X, y, reg, fit_intercept)
            if cand_obj <= obj + 1e-4 * t * slope:
                break
            t *= 0.5
        else:
            # no decrease possible at machine precision
            converged = np.max(np.abs(grad)) / n <= max(tol, 1e-6)
            break
        improved = cand_obj < obj
        params, obj = cand, cand_obj
        if reg == 0 and improved and np.max(np.abs(params), initial=0.0) > separation_bound:
            separation = True
            n_iter += 1
            break

    b0, b = _split(params, fit_intercept)
    se = b0_se = None
    if converged and not separation:
        prob = expit(_eta(X, params, fit_intercept))
        H = _hessian(X, prob * (1 - prob), reg, fit_intercept)
        if np.linalg.cond(H) < 1e12:
            cov = np.linalg.inv(H)
            diag = np.sqrt(np.clip(np.diag(cov), 0.0, None))
            if fit_intercept:
                b0_se, se = float(diag[0]), diag[1:]
            else:
                se = diag
    return LogisticModel(
        coef=np.array(b, dtype=np.float64),
        intercept=float(b0),
        converged=bool(converged and not separation),
        separation=separation,
        n_iter=int(n_iter),
        reg=float(reg),
        standard_errors=se,
        intercept_se=b0_se,
    )


def predict_proba(model: LogisticModel, X) -> np.ndarray:
    """Inverse-logit of the linear predictor, one probability per row."""
    X = _as_design(X)
    if X.shape[1] != model.n_features:
        raise DataError(f"model expects {model.n_features} features, got {X.shape[1]}")
    params = np.concatenate([[model.intercept], model.coef])
    return expit(_eta(X, params, True))


class LogisticRegression(ClassifierMixin, BaseEstimator):
    """scikit-learn compatible wrapper around :func:`fit_logistic`.

    Parameters
    ----------
    reg : float or "auto"
        Ridge strength. ``"auto"`` uses ``1e-4 * n_samples``.
    tol, max_iter, fit_intercept, separation_bound
        See :func:`fit_logistic`.
    threshold : float
        ``predict`` returns 1 only when the probability is strictly above it.
    """

    def __init__(
        self,
        reg="auto",
        tol=DEFAULT_TOL,
        max_iter=DEFAULT_MAX_ITER,
        fit_intercept=True,
        separation_bound=SEPARATION_BOUND,
        threshold=0.5,
    ):
        self.reg = reg
        self.tol = tol
        self.max_iter = max_iter
        self.fit_intercept = fit_intercept
        self.separation_bound = separation_bound
        self.threshold = threshold

    def _resolved_reg(self, n):
        if isinstance(self.reg, str):
            if self.reg != "auto":
                raise ValueError(f"reg must be a float or 'auto', got {self.reg!r}")
            return AUTO_REG_PER_ROW * n
        return float(self.reg)

    def fit(self, X, y):
        X = check_array(X, accept_sparse="csr", dtype=np.float64, ensure_min_features=0)
        y = np.asarray(y).ravel()
        self.classes_ = np.array([0, 1])
        self.model_ = fit_logistic(
            X,
            y,
            reg=self._resolved_reg(X.shape[0]),
            tol=self.tol,
            max_iter=self.max_iter,
            fit_intercept=self.fit_intercept,
            separation_bound=self.separation_bound,
        )
        if not self.model_.converged:
            warnings.warn(
                "logistic fit did not converge"
                + (" (separation detected)" if self.model_.separation else ""),
                RuntimeWarning,
                stacklevel=2,
            )
        self.coef_ = self.model_.coef.reshape(1, -1)
        self.intercept_ = np.array([self.model_.intercept])
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X, accept_sparse="csr", dtype=np.float64, ensure_min_features=0)
        return np.asarray(X @ self.model_.coef).ravel() + self.model_.intercept

    def predict_proba(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X, accept_sparse="csr", dtype=np.float64, ensure_min_features=0)
        p1 = predict_proba(self.model_, X)
        return np.column_stack([1 - p1, p1])

    def predict(self, X):
        return (self.predict_proba(X)[:, 1] > self.threshold).astype(int)
