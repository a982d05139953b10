import math

import numpy as np
import pytest

from synthbench.baselines import GenerationConfig, generate_resample
from synthbench.corpus import PhenotypeMatrix
from synthbench.exceptions import ConfigError, DataError
from synthbench.ml import train_test_split
from synthbench.utility import (
    DEFAULT_OUTCOME,
    OutcomeSpec,
    analytical_utility,
    per_code_tstr_sweep,
    predictive_utility,
    sweep_spearman,
)

import oracles
from conftest import correlated_fixture, make_matrix


def table_matrix(a, b, c, d, codes=("X", "Y")):
    """Columns (predictor, outcome) realising counts (x1y1, x1y0, x0y1, x0y0)."""
    rows = [[1, 1]] * a + [[1, 0]] * b + [[0, 1]] * c + [[0, 0]] * d
    return make_matrix(rows, list(codes))


# -- outcome specs -----------------------------------------------------------------


def test_outcome_spec_parse():
    assert OutcomeSpec.parse("EM_202").code == "EM_202"
    assert OutcomeSpec.parse("CA*").prefix == "CA"
    assert OutcomeSpec.parse("prefix:CA").prefix == "CA"
    vocab = make_matrix([[0, 0, 0]], ["CA_1", "CA_2", "EM_236"]).vocabulary
    assert OutcomeSpec.parse("CA*").resolve(vocab) == [0, 1]
    with pytest.raises(ConfigError):
        OutcomeSpec.parse("ZZ").resolve(vocab)


# -- analytical ----------------------------------------------------------------------


def test_analytical_woolf_example():
    res = analytical_utility(table_matrix(30, 10, 10, 30), "Y", "X")
    assert res.converged
    assert res.beta_hat == pytest.approx(math.log(9), abs=1e-6)
    assert res.ci_low == pytest.approx(1.185, abs=1e-3)
    assert res.ci_high == pytest.approx(3.209, abs=1e-3)
    assert res.ci_low <= res.beta_hat <= res.ci_high


def test_analytical_single_class_outcome():
    res = analytical_utility(table_matrix(5, 0, 5, 0), "Y", "X")
    assert res.failure_reason == "single-class outcome"
    assert not res.converged


def test_analytical_zero_cell_positivity():
    res = analytical_utility(table_matrix(20, 0, 10, 30), "Y", "X")
    assert not res.converged
    assert res.failure_reason.startswith("separation/positivity")
    assert "x1_y0" in res.failure_reason


def test_analytical_prefix_outcome():
    m = make_matrix(
        [[1, 0, 1]] * 12 + [[0, 1, 1]] * 8 + [[0, 0, 1]] * 10 + [[0, 0, 0]] * 20 + [[1, 0, 0]] * 5,
        ["CA_1", "CA_2", "EM_236"],
    )
    res = analytical_utility(m, "CA*", "EM_236")
    # y = any CA: counts x1y1=20, x1y0=10, x0y1=5, x0y0=20
    beta, se = oracles.woolf(20, 10, 5, 20)
    assert res.beta_hat == pytest.approx(beta, abs=1e-6)
    assert res.se == pytest.approx(se, abs=1e-6)


def test_analytical_predictor_is_outcome():
    m = make_matrix([[1, 0], [0, 1]], ["CA_1", "CA_2"])
    with pytest.raises(ConfigError):
        analytical_utility(m, "CA*", "CA_2")


def test_analytical_bootstrap_coverage():
    real = table_matrix(60, 40, 30, 70)
    beta = analytical_utility(real, "Y", "X").beta_hat
    covered = 0
    for s in range(20):
        boot = generate_resample(real, GenerationConfig(real.n_rows, seed=s))
        r = analytical_utility(boot, "Y", "X")
        covered += r.ci_low <= beta <= r.ci_high
    assert covered >= 18


# -- predictive -----------------------------------------------------------------------


@pytest.fixture(scope="module")
def real():
    return correlated_fixture(n=800, k=24, seed=4)


def copy_of_train(real, seed):
    y = real.sparse[:, 0].toarray().ravel()
    train, _ = train_test_split(y, 0.2, seed)
    return real.take_rows(train)


def test_tstr_copy_of_train(real):
    res = predictive_utility(real, copy_of_train(real, 3), seed=3)
    assert res.outcome == DEFAULT_OUTCOME
    assert abs(res.deltas["auc_tstr_minus_trtr"]) <= 0.01
    assert res.n_train + res.n_test == real.n_rows


def test_label_shuffle_destroys_signal():
    real = correlated_fixture(n=2000, k=24, seed=4)
    codes = list(real.vocabulary.codes)
    tstr = []
    for s in range(10):
        X = real.toarray().copy()
        X[:, 0] = np.random.default_rng(s).permutation(X[:, 0])
        res = predictive_utility(real, make_matrix(X, codes), seed=3)
        tstr.append(res.auc_tstr)
    assert res.auc_trtr > 0.65
    assert abs(np.mean(tstr) - 0.5) < 0.05


def test_trtr_independent_of_syn(real):
    a = predictive_utility(real, copy_of_train(real, 1), seed=5)
    b = predictive_utility(real, generate_resample(real, GenerationConfig(300, 2)), seed=5)
    assert a.auc_trtr == b.auc_trtr
    assert a.acc_trtr == b.acc_trtr


def test_split_determinism(real):
    syn = generate_resample(real, GenerationConfig(500, 9))
    assert predictive_utility(real, syn, seed=2).to_dict() == predictive_utility(real, syn, seed=2).to_dict()


def test_outcome_never_a_predictor(rng):
    # outcome independent of every other column: a leaked outcome would give AUC 1
    X = (rng.random((600, 8)) < 0.4).astype(np.uint8)
    m = make_matrix(X, ["CV_401"] + [f"C{j}" for j in range(7)])
    res = predictive_utility(m, m, seed=1)
    assert res.auc_trtr < 0.7
    assert res.auc_tstr < 0.8


def test_single_class_training_recorded(real):
    X = real.toarray()[:200].copy()
    X[:, 0] = 0
    syn = make_matrix(X, list(real.vocabulary.codes))
    res = predictive_utility(real, syn, seed=1)
    assert "tstr" in res.failures
    assert res.auc_tstr is None
    assert res.auc_trtr is not None
    assert res.deltas["auc_tstr_minus_trtr"] is None


def test_predictive_preconditions(real):
    with pytest.raises(ConfigError):
        predictive_utility(real, real, outcome="NOPE")
    small = real.take_rows(range(5))
    with pytest.raises(DataError):
        predictive_utility(small, small)


def test_deltas_derived_not_stored(real):
    res = predictive_utility(real, copy_of_train(real, 0), seed=0)
    res.auc_tstr = 0.25
    assert res.deltas["auc_tstr_minus_trtr"] == pytest.approx(0.25 - res.auc_trtr)


# -- sweep -------------------------------------------------------------------------------


def test_sweep_filters_by_prevalence():
    rng = np.random.default_rng(0)
    X = np.column_stack([rng.random(200) < 0.5, rng.random(200) < 0.05, rng.random(200) < 0.4]).astype(np.uint8)
    m = make_matrix(X, ["a", "b", "c"])
    res = per_code_tstr_sweep(m, m, n_codes=2, seed=1)
    assert [r["code"] for r in res.rows] == ["a", "c"]
    assert res.n_eligible == 2
    with pytest.raises(DataError, match="2 codes"):
        per_code_tstr_sweep(m, m, n_codes=3)


def test_sweep_copy_tracks_trtr(real):
    res = per_code_tstr_sweep(real, real, n_codes=5, min_prev=0.1, seed=4)
    assert len(res.rows) == 5
    # syn holds the test rows too, so TSTR can only be optimistic
    for row in res.rows:
        assert -0.005 <= row["auc_tstr"] - row["auc_trtr"] <= 0.05


def test_sweep_spearman_monotone_decreasing():
    rows = [{"prevalence": p, "auc_tstr": a} for p, a in [(0.1, 0.9), (0.2, 0.8), (0.3, 0.7), (0.4, 0.6)]]
    assert sweep_spearman(rows) == pytest.approx(-1.0)
