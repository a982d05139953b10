import numpy as np
import pytest

from synthbench.baselines import (
    GenerationConfig,
    PrevalenceBasedRandom,
    Resample,
    generate_pbr,
    generate_resample,
    make_generator,
)
from synthbench.corpus import prevalence
from synthbench.exceptions import ConfigError, DataError, UndefinedInputError

from conftest import make_matrix


def test_pbr_degenerate_probabilities():
    m = generate_pbr([1.0, 0.0], GenerationConfig(3, seed=1))
    np.testing.assert_array_equal(m.toarray(), [[1, 0]] * 3)


def test_pbr_marginal_close():
    m = generate_pbr([0.3], GenerationConfig(100_000, seed=5))
    assert abs(prevalence(m)[0] - 0.3) < 0.01


def test_pbr_columns_independent():
    X = generate_pbr([0.5, 0.5], GenerationConfig(200_000, seed=9)).toarray().astype(float)
    r = np.corrcoef(X[:, 0], X[:, 1])[0, 1]
    assert abs(r) <= 0.01


def test_pbr_pairwise_correlations_small():
    rng = np.random.default_rng(3)
    prev = rng.uniform(0.1, 0.9, 6)
    X = generate_pbr(prev, GenerationConfig(200_000, seed=2)).toarray().astype(float)
    C = np.corrcoef(X, rowvar=False)
    assert np.max(np.abs(C - np.eye(6))) <= 0.02


def test_pbr_rejects_bad_prevalence():
    with pytest.raises(DataError):
        generate_pbr([1.2], GenerationConfig(3))


def test_resample_single_row():
    real = make_matrix([[1, 0, 1]])
    out = generate_resample(real, GenerationConfig(4, seed=0))
    np.testing.assert_array_equal(out.toarray(), [[1, 0, 1]] * 4)


def test_resample_closure(rng):
    X = (rng.random((50, 8)) < 0.4).astype(np.uint8)
    real = make_matrix(X)
    out = generate_resample(real, GenerationConfig(50, seed=3)).toarray()
    real_rows = {r.tobytes() for r in X}
    assert all(r.tobytes() in real_rows for r in out)
    assert out.shape == X.shape


def test_resample_marginal_close(rng):
    X = np.zeros((1000, 1), dtype=np.uint8)
    X[:400] = 1
    out = generate_resample(make_matrix(X), GenerationConfig(100_000, seed=4))
    assert abs(prevalence(out)[0] - 0.4) < 0.01


def test_resample_empty_raises():
    with pytest.raises(UndefinedInputError):
        generate_resample(make_matrix(np.zeros((0, 2))), GenerationConfig(3))


def test_config_validation():
    with pytest.raises(ConfigError):
        GenerationConfig(0)
    with pytest.raises(ConfigError):
        GenerationConfig(5, seed=-1)


@pytest.mark.parametrize("method", ["pbr", "resample"])
def test_determinism_across_workers(method, rng):
    real = make_matrix((rng.random((300, 12)) < 0.3).astype(np.uint8))
    a = make_generator(method, n_samples=70_000, random_state=17, n_jobs=1).fit_sample(real)
    b = make_generator(method, n_samples=70_000, random_state=17, n_jobs=4).fit_sample(real)
    c = make_generator(method, n_samples=70_000, random_state=18, n_jobs=1).fit_sample(real)
    assert a == b
    assert a != c


def test_frozen_stream_values():
    # pins the PCG64/SeedSequence layout; a change here breaks reproducibility
    m = generate_pbr([0.5] * 4, GenerationConfig(6, seed=2024))
    r = generate_resample(make_matrix(np.eye(4, dtype=np.uint8)), GenerationConfig(6, seed=2024))
    assert m.toarray().tolist() == FROZEN_PBR
    assert r.toarray().argmax(axis=1).tolist() == FROZEN_RESAMPLE


# computed with bare numpy: Generator(PCG64(SeedSequence(2024, spawn_key=(crc32(b"pbr"), k))))
FROZEN_PBR = [[0, 1, 1, 0], [1, 0, 1, 1], [1, 0, 1, 0], [1, 1, 0, 1], [1, 0, 0, 1], [0, 1, 1, 1]]
FROZEN_RESAMPLE = [0, 3, 3, 0, 1, 2]


def test_estimators_api(rng):
    real = make_matrix((rng.random((40, 5)) < 0.5).astype(np.uint8))
    pbr = PrevalenceBasedRandom(n_samples=10, random_state=1).fit(real)
    np.testing.assert_allclose(pbr.prevalence_, prevalence(real))
    assert pbr.sample().shape == (10, 5)
    assert pbr.sample(3).shape == (3, 5)
    res = Resample(n_samples=7).fit(real)
    assert res.sample().vocabulary == real.vocabulary
    assert set(pbr.get_params()) == {"n_samples", "random_state", "n_jobs"}
    with pytest.raises(ConfigError):
        make_generator("gan")
