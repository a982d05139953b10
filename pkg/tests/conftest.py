import numpy as np
import pytest

from synthbench.corpus import PhenotypeMatrix, Vocabulary


def make_matrix(X, codes=None, ids=None):
    X = np.asarray(X, dtype=np.uint8)
    if codes is None:
        codes = [f"C{j:03d}" for j in range(X.shape[1])]
    return PhenotypeMatrix(X, Vocabulary(codes), ids)


def random_binary(rng, n, k, p=None):
    p = rng.uniform(0.05, 0.7, k) if p is None else np.asarray(p)
    return (rng.random((n, k)) < p).astype(np.uint8)


def correlated_fixture(n=2000, k=100, seed=11):
    """Columns in blocks of four share a latent factor; column 0 is the outcome."""
    rng = np.random.default_rng(seed)
    latent = rng.random((n, k // 4 + 1)) < 0.3
    noise = rng.random((n, k))
    base = rng.uniform(0.02, 0.25, k)
    X = np.where(latent[:, np.arange(k) // 4], noise < base + 0.5, noise < base).astype(np.uint8)
    codes = ["CV_401"] + [f"X_{j:03d}" for j in range(1, k)]
    return make_matrix(X, codes, [f"p{i}" for i in range(n)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def fixture_2000x100():
    return correlated_fixture()
