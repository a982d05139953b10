"""Input validation shared by the metric modules.

Metric functions accept either :class:`PhenotypeMatrix` objects or plain
0/1 array-likes; these helpers normalise both to dense uint8 arrays.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from sklearn.utils.validation import check_array

from .corpus.types import PhenotypeMatrix
from .exceptions import DataError, VocabularyMismatchError


def as_binary_array(X, *, name="X", allow_empty=False) -> np.ndarray:
    """Dense uint8 0/1 array from a PhenotypeMatrix, sparse matrix, or array-like."""
    if isinstance(X, PhenotypeMatrix):
        arr = X.toarray()
    elif sp.issparse(X):
        arr = X.toarray()
    else:
        arr = check_array(
            X, dtype=None, ensure_2d=True, ensure_min_samples=0, ensure_min_features=0
        )
    if arr.ndim != 2:
        raise DataError(f"{name} must be 2-D")
    if not allow_empty and arr.shape[0] == 0:
        raise DataError(f"{name} has no rows")
    if arr.dtype != np.uint8:
        if arr.size and not np.isin(arr, (0, 1)).all():
            raise DataError(f"{name} must contain only 0/1 values")
        arr = arr.astype(np.uint8)
    return arr


def codes_of(X, k: int) -> list[str]:
    if isinstance(X, PhenotypeMatrix):
        return list(X.vocabulary.codes)
    return [str(j) for j in range(k)]


def check_paired(real, syn, *, allow_empty=False) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Validate a real/synthetic pair and return dense arrays plus shared codes."""
    if isinstance(real, PhenotypeMatrix) and isinstance(syn, PhenotypeMatrix):
        if real.vocabulary != syn.vocabulary:
            raise VocabularyMismatchError(
                "real and synthetic matrices do not share a vocabulary; "
                "restrict both to the intersection first"
            )
    R = as_binary_array(real, name="real", allow_empty=allow_empty)
    S = as_binary_array(syn, name="syn", allow_empty=allow_empty)
    if R.shape[1] != S.shape[1]:
        raise VocabularyMismatchError(
            f"real has {R.shape[1]} columns, synthetic has {S.shape[1]}"
        )
    return R, S, codes_of(real if isinstance(real, PhenotypeMatrix) else syn, R.shape[1])


def unique_rows(X: np.ndarray):
    """Unique rows of a 0/1 array ordered by first occurrence: (rows, first_index, inverse)."""
    if X.shape[0] == 0:
        return X, np.empty(0, dtype=np.intp), np.empty(0, dtype=np.intp)
    packed = np.ascontiguousarray(np.packbits(X, axis=1))
    if packed.shape[1] == 0:
        return X[:1], np.array([0]), np.zeros(X.shape[0], dtype=np.intp)
    keys = packed.view(np.dtype((np.void, packed.shape[1]))).ravel()
    _, first, inverse = np.unique(keys, return_index=True, return_inverse=True)
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(order.shape[0])
    return X[first[order]], first[order], rank[inverse.ravel()]
