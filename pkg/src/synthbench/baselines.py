"""Reference generators: prevalence-based random (PBR) and bootstrap resample.

Both are deterministic functions of ``(input, n_samples, seed)`` regardless of
``n_jobs``: PBR draws column ``k`` from its own PCG64 stream keyed by ``k``;
Resample draws row indices in fixed-size chunks, one stream per chunk.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._random import make_rng
from .corpus.aggregate import prevalence as _prevalence
from .corpus.types import PhenotypeMatrix, Vocabulary
from .exceptions import ConfigError, DataError, UndefinedInputError

DEFAULT_N_SAMPLES = 50_000
_RESAMPLE_CHUNK = 1 << 16


@dataclass(frozen=True)
class GenerationConfig:
    n_samples: int = DEFAULT_N_SAMPLES
    seed: int = 0

    def __post_init__(self):
        if self.n_samples < 1:
            raise ConfigError("n_samples must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")


def _map(fn, items, n_jobs):
    if n_jobs is None or n_jobs == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(fn, items))


def _syn_ids(m):
    return [f"syn{i}" for i in range(m)]


def generate_pbr(prev, cfg: GenerationConfig, vocabulary=None, n_jobs=None) -> PhenotypeMatrix:
    """Independent Bernoulli(prev[k]) draws for every cell of an M x K matrix."""
    prev = np.asarray(prev, dtype=np.float64).ravel()
    if prev.size and (np.any(prev < 0) or np.any(prev > 1) or not np.all(np.isfinite(prev))):
        raise DataError("prevalences must lie in [0, 1]")
    k = prev.shape[0]
    m = cfg.n_samples
    vocab = vocabulary if vocabulary is not None else Vocabulary(str(j) for j in range(k))

    def column(j):
        if prev[j] <= 0.0:
            return np.empty(0, dtype=np.int64)
        u = make_rng(cfg.seed, "pbr", j).random(m)
        return np.flatnonzero(u < prev[j])

    cols = _map(column, list(range(k)), n_jobs)
    indptr = np.zeros(k + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([c.shape[0] for c in cols])
    indices = np.concatenate(cols) if cols else np.empty(0, dtype=np.int64)
    csc = sp.csc_matrix(
        (np.ones(indices.shape[0], dtype=np.uint8), indices, indptr), shape=(m, k)
    )
    return PhenotypeMatrix(csc.tocsr(), vocab, _syn_ids(m))


def generate_resample(real: PhenotypeMatrix, cfg: GenerationConfig, n_jobs=None) -> PhenotypeMatrix:
    """Draw M rows uniformly with replacement from ``real``."""
    n = real.n_rows
    if n == 0:
        raise UndefinedInputError("cannot resample from an empty matrix")
    m = cfg.n_samples
    starts = list(range(0, m, _RESAMPLE_CHUNK))

    def chunk(c):
        size = min(_RESAMPLE_CHUNK, m - starts[c])
        return make_rng(cfg.seed, "resample", c).integers(0, n, size=size)

    idx = np.concatenate(_map(chunk, list(range(len(starts))), n_jobs))
    return PhenotypeMatrix(real.sparse[idx], real.vocabulary, _syn_ids(m))


class _Baseline(BaseEstimator):
    def __init__(self, n_samples=DEFAULT_N_SAMPLES, random_state=0, n_jobs=None):
        self.n_samples = n_samples
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _config(self, n_samples):
        return GenerationConfig(
            n_samples=self.n_samples if n_samples is None else n_samples,
            seed=self.random_state,
        )

    def fit_sample(self, real: PhenotypeMatrix, n_samples=None) -> PhenotypeMatrix:
        return self.fit(real).sample(n_samples)


class PrevalenceBasedRandom(_Baseline):
    """Synthesiser that matches marginal prevalences and nothing else.

    ``fit`` estimates per-code prevalence; ``sample`` draws independent
    Bernoulli columns.
    """

    def fit(self, real: PhenotypeMatrix, y=None):
        self.prevalence_ = _prevalence(real)
        self.vocabulary_ = real.vocabulary if isinstance(real, PhenotypeMatrix) else None
        return self

    def sample(self, n_samples=None) -> PhenotypeMatrix:
        check_is_fitted(self, "prevalence_")
        return generate_pbr(
            self.prevalence_, self._config(n_samples), self.vocabulary_, n_jobs=self.n_jobs
        )


class Resample(_Baseline):
    """Bootstrap synthesiser: emits real rows drawn with replacement."""

    def fit(self, real: PhenotypeMatrix, y=None):
        if not isinstance(real, PhenotypeMatrix):
            real = PhenotypeMatrix(np.asarray(real), [str(j) for j in range(np.shape(real)[1])])
        if real.n_rows == 0:
            raise UndefinedInputError("cannot resample from an empty matrix")
        self.real_ = real
        self.vocabulary_ = real.vocabulary
        return self

    def sample(self, n_samples=None) -> PhenotypeMatrix:
        check_is_fitted(self, "real_")
        return generate_resample(self.real_, self._config(n_samples), n_jobs=self.n_jobs)


GENERATORS = {"pbr": PrevalenceBasedRandom, "resample": Resample}


def make_generator(method: str, **params) -> _Baseline:
    try:
        return GENERATORS[method.lower()](**params)
    except KeyError:
        raise ConfigError(f"unknown generator {method!r}; choose from {sorted(GENERATORS)}") from None
