import math
import warnings

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from synthbench.exceptions import ConfigError, DataError, SeparationError, UndefinedInputError
from synthbench.ml import (
    LogisticModel,
    LogisticRegression,
    accuracy,
    auc,
    f1,
    fit_logistic,
    penalized_gradient,
    penalized_objective,
    precision_recall,
    predict_proba,
    spearman,
    stratified_kfold,
    train_test_split,
)

import oracles


def table_design(a, b, c, d):
    """Rows for counts (x1y1, x1y0, x0y1, x0y0)."""
    x = np.repeat([1, 1, 0, 0], [a, b, c, d])
    y = np.repeat([1, 0, 1, 0], [a, b, c, d])
    return x.reshape(-1, 1).astype(float), y


# -- fit_logistic ---------------------------------------------------------------


def test_intercept_only_closed_form():
    y = np.array([1, 1, 1, 0] * 5)
    m = fit_logistic(np.zeros((20, 0)), y)
    assert m.intercept == pytest.approx(math.log(3), abs=1e-10)
    assert m.converged


def test_two_by_two_woolf():
    X, y = table_design(30, 10, 10, 30)
    m = fit_logistic(X, y)
    beta, se = oracles.woolf(30, 10, 10, 30)
    assert m.coef[0] == pytest.approx(2.1972245773, abs=1e-6)
    assert m.coef[0] == pytest.approx(beta, abs=1e-8)
    assert m.standard_errors[0] == pytest.approx(0.5163977795, abs=1e-6)
    assert m.standard_errors[0] == pytest.approx(se, abs=1e-8)
    lo, hi = m.confint()[0]
    assert lo == pytest.approx(beta - 1.96 * se, abs=1e-4)
    assert hi == pytest.approx(beta + 1.96 * se, abs=1e-4)


def test_separation_flag():
    X = np.array([[0], [0], [0], [1], [1], [1]], dtype=float)
    y = np.array([0, 0, 0, 1, 1, 1])
    m = fit_logistic(X, y)
    assert m.separation
    assert not m.converged
    assert m.standard_errors is None


def test_single_class_with_features_raises():
    with pytest.raises(SeparationError):
        fit_logistic(np.ones((4, 1)), np.ones(4))


def test_input_checks():
    with pytest.raises(DataError):
        fit_logistic(np.ones((3, 1)), [0, 1])
    with pytest.raises(DataError):
        fit_logistic(np.ones((2, 1)), [0, 2])
    with pytest.raises(DataError):
        fit_logistic(np.ones((2, 1)), [0, 1], reg=-1)


def test_sparse_matches_dense(rng):
    X = (rng.random((150, 6)) < 0.3).astype(float)
    y = (rng.random(150) < 1 / (1 + np.exp(-(X @ rng.normal(size=6) - 0.5)))).astype(int)
    a = fit_logistic(X, y, reg=0.5)
    b = fit_logistic(sp.csr_matrix(X), y, reg=0.5)
    np.testing.assert_allclose(a.coef, b.coef, atol=1e-10)
    assert a.intercept == pytest.approx(b.intercept, abs=1e-10)


def test_ridge_excludes_intercept():
    # with a huge penalty the slope vanishes but the intercept still fits the mean
    X, y = table_design(30, 10, 10, 30)
    m = fit_logistic(X, y, reg=1e9)
    assert abs(m.coef[0]) < 1e-6
    assert m.intercept == pytest.approx(0.0, abs=1e-6)


def test_objective_matches_oracle(rng):
    X = (rng.random((40, 3)) < 0.5).astype(float)
    y = rng.integers(0, 2, 40)
    params = rng.normal(size=4)
    got = penalized_objective(params, X, y, reg=0.7)
    assert got == pytest.approx(oracles.neg_loglik(params, X.tolist(), y.tolist(), 0.7), rel=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_gradient_central_differences(seed):
    rng = np.random.default_rng(seed)
    n, p = 60, 4
    X = (rng.random((n, p)) < 0.4).astype(float)
    y = rng.integers(0, 2, n)
    params = rng.normal(size=p + 1)
    g = penalized_gradient(params, X, y, reg=0.3)
    h = 1e-6
    num = np.array([
        (penalized_objective(params + h * e, X, y, 0.3) - penalized_objective(params - h * e, X, y, 0.3)) / (2 * h)
        for e in np.eye(p + 1)
    ])
    assert np.linalg.norm(g - num) / max(np.linalg.norm(num), 1e-12) <= 1e-5


def test_predict_proba_examples():
    zero = LogisticModel(np.zeros(2), 0.0, True, False, 0)
    np.testing.assert_allclose(predict_proba(zero, np.ones((3, 2))), 0.5)
    m = LogisticModel(np.zeros(0), math.log(3), True, False, 0)
    np.testing.assert_allclose(predict_proba(m, np.zeros((2, 0))), 0.75)
    with pytest.raises(DataError):
        predict_proba(zero, np.ones((2, 3)))


def test_predict_monotone():
    m = LogisticModel(np.array([1.5, -0.5]), 0.1, True, False, 0)
    lo = predict_proba(m, np.array([[0.0, 1.0]]))
    hi = predict_proba(m, np.array([[1.0, 1.0]]))
    assert hi[0] >= lo[0]
    assert 0 < lo[0] < 1


def test_estimator_api(rng):
    X = (rng.random((200, 5)) < 0.5).astype(float)
    y = (0.6 * X[:, 0] + rng.random(200) > 0.7).astype(int)
    clf = LogisticRegression(reg=0.0)
    assert clf.get_params()["reg"] == 0.0
    clf.fit(X, y)
    proba = clf.predict_proba(X)
    assert proba.shape == (200, 2)
    np.testing.assert_allclose(proba.sum(axis=1), 1.0)
    np.testing.assert_array_equal(clf.predict(X), (proba[:, 1] > 0.5).astype(int))
    assert clf.coef_.shape == (1, 5)


def test_estimator_auto_reg(rng):
    X = (rng.random((100, 3)) < 0.5).astype(float)
    y = rng.integers(0, 2, 100)
    clf = LogisticRegression().fit(X, y)
    assert clf.model_.reg == pytest.approx(1e-4 * 100)


# -- metrics ------------------------------------------------------------------------


def test_auc_examples():
    assert auc([0.9, 0.8, 0.3, 0.1], [1, 1, 0, 0]) == 1.0
    assert auc([0.9, 0.2, 0.8, 0.1], [1, 1, 0, 0]) == 0.75
    assert auc([0.4] * 6, [1, 0, 1, 0, 1, 0]) == 0.5


def test_auc_one_class_raises():
    with pytest.raises(UndefinedInputError):
        auc([0.1, 0.2], [1, 1])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 5), st.integers(0, 1)), min_size=2, max_size=40))
def test_auc_matches_pair_enumeration(pairs):
    scores = [s for s, _ in pairs]
    labels = [y for _, y in pairs]
    if len(set(labels)) < 2:
        return
    assert auc(scores, labels) == pytest.approx(oracles.auc_pairs(scores, labels), abs=1e-12)
    # strictly monotone transform leaves it unchanged
    assert auc(np.exp(np.array(scores, float)), labels) == pytest.approx(auc(scores, labels), abs=1e-12)


def test_f1_and_precision_recall():
    assert f1([1, 0, 1], [1, 0, 1]) == 1.0
    assert f1([1, 1], [1, 0]) == pytest.approx(2 / 3)
    assert precision_recall([1, 1], [1, 0]) == (0.5, 1.0)
    assert f1([0, 0], [0, 0]) == 0.0
    with pytest.raises(DataError):
        f1([1], [1, 0])


def test_accuracy_tie_goes_to_zero():
    assert accuracy([0.5, 0.5], [1, 0]) == 0.5
    assert accuracy([0.51, 0.5], [1, 0]) == 1.0


def test_spearman():
    assert spearman([1, 2, 3, 4], [10, 8, 5, 1]) == pytest.approx(-1.0)
    assert spearman([1, 2, 2, 3], [1, 2, 2, 3]) == pytest.approx(1.0)
    assert math.isnan(spearman([1, 1, 1], [1, 2, 3]))


# -- folds and splits ---------------------------------------------------------------------


def test_stratified_kfold_counts():
    labels = np.array([1] * 4 + [0] * 6)
    plan = stratified_kfold(labels, k=2, seed=3)
    for f in range(2):
        members = labels[plan.assignments == f]
        assert (members == 1).sum() == 2
        assert (members == 0).sum() == 3


def test_stratified_kfold_loo():
    labels = np.array([0, 1, 0, 1, 1])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        plan = stratified_kfold(labels, k=5)
    np.testing.assert_array_equal(plan.fold_sizes(), [1] * 5)


def test_stratified_kfold_deterministic_and_errors():
    labels = np.arange(20) % 3 == 0
    a = stratified_kfold(labels, 4, seed=8)
    b = stratified_kfold(labels, 4, seed=8)
    np.testing.assert_array_equal(a.assignments, b.assignments)
    with pytest.raises(DataError):
        stratified_kfold([0, 1], k=3)
    with pytest.raises(ConfigError):
        stratified_kfold([0, 1, 0], k=1)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.lists(st.integers(0, 1), min_size=12, max_size=60), st.integers(0, 99))
def test_stratified_balance_property(k, labels, seed):
    labels = np.array(labels)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        plan = stratified_kfold(labels, k, seed)
    n_pos = labels.sum()
    for f in range(k):
        pos = labels[plan.assignments == f].sum()
        assert abs(pos - n_pos / k) < 1
    splits = list(plan.split())
    assert sorted(np.concatenate([t for _, t in splits]).tolist()) == list(range(len(labels)))


def test_train_test_split_stratified():
    labels = np.array([1] * 10 + [0] * 40)
    train, test = train_test_split(labels, 0.2, seed=1)
    assert len(test) == 10
    assert labels[test].sum() == 2
    assert set(train).isdisjoint(test)
    t2, s2 = train_test_split(labels, 0.2, seed=1)
    np.testing.assert_array_equal(test, s2)
