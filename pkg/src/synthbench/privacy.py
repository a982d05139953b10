"""Membership-inference risk (distance to closest synthetic record) and
attribute-inference risk (1-NN recovery of hidden codes).

Distances between binary vectors are computed as Hamming counts
``|a| + |b| - 2 a.b`` via float32 matrix products, which are exact for
K < 2**24, and square-rooted at the end (Euclidean on 0/1 data).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_paired, unique_rows as _unique_rows
from .exceptions import ConfigError, DataError, UndefinedInputError
from .ml.metrics import f1_from_counts

DEFAULT_HIST_BINS = 50
_BLOCK_CELLS = 1 << 24


def nearest_neighbors(query, reference, n_jobs=None) -> tuple[np.ndarray, np.ndarray]:
    """Hamming distance to, and index of, the closest ``reference`` row for each query row.

    Ties resolve to the lowest reference index. Both inputs are 0/1 arrays
    with equal column counts. Output does not depend on ``n_jobs``.
    """
    query = np.asarray(query, dtype=np.uint8)
    reference = np.asarray(reference, dtype=np.uint8)
    if reference.shape[0] == 0:
        raise DataError("reference set is empty")
    if query.shape[1] != reference.shape[1]:
        raise DataError("query and reference column counts differ")
    n = query.shape[0]
    if n == 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)

    ref_u, ref_first, _ = _unique_rows(reference)
    q_u, _, q_inv = _unique_rows(query)
    ref_f = ref_u.astype(np.float32)
    ref_norm = ref_u.sum(axis=1, dtype=np.int64)
    q_norm = q_u.sum(axis=1, dtype=np.int64)

    step = max(1, _BLOCK_CELLS // max(1, ref_u.shape[0]))
    starts = list(range(0, q_u.shape[0], step))

    def block(start):
        q = q_u[start : start + step]
        dots = q.astype(np.float32) @ ref_f.T
        d = q_norm[start : start + step, None] + ref_norm[None, :] - 2 * np.rint(dots).astype(np.int64)
        j = np.argmin(d, axis=1)
        return d[np.arange(d.shape[0]), j], j

    if n_jobs and n_jobs > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            parts = list(pool.map(block, starts))
    else:
        parts = [block(s) for s in starts]
    dist_u = np.concatenate([p[0] for p in parts])
    idx_u = np.concatenate([p[1] for p in parts])
    return dist_u[q_inv].astype(np.int64), ref_first[idx_u[q_inv]].astype(np.int64)


# -- membership inference --------------------------------------------------


@dataclass
class MirResult:
    mean: float
    median: float
    distances: np.ndarray
    exact_match_fraction: float
    histogram: dict
    cdf_points: list[tuple[float, float]]
    n_excluded: int = 0

    @property
    def n_evaluated(self) -> int:
        return int(self.distances.shape[0])

    def to_dict(self, include_distances: bool = False) -> dict:
        d = {
            "mean": self.mean,
            "median": self.median,
            "exact_match_fraction": self.exact_match_fraction,
            "n_evaluated": self.n_evaluated,
            "n_excluded_zero_rows": self.n_excluded,
            "histogram": self.histogram,
            "cdf": [[x, q] for x, q in self.cdf_points],
        }
        if include_distances:
            d["distances"] = self.distances.tolist()
        return d


def distance_histogram(distances, bins: int = DEFAULT_HIST_BINS) -> dict:
    """Equal-width bins over ``[0, max(distances)]`` (``[0, 1]`` if all zero)."""
    distances = np.asarray(distances, dtype=np.float64)
    if bins < 1:
        raise ConfigError("bins must be >= 1")
    hi = float(distances.max()) if distances.size and distances.max() > 0 else 1.0
    counts, edges = np.histogram(distances, bins=bins, range=(0.0, hi))
    return {"edges": edges.tolist(), "counts": counts.astype(int).tolist()}


def distance_cdf(distances) -> list[tuple[float, float]]:
    """(distance, fraction of records with d <= distance) at every distinct distance."""
    distances = np.sort(np.asarray(distances, dtype=np.float64))
    if distances.size == 0:
        return []
    values, counts = np.unique(distances, return_counts=True)
    cum = np.cumsum(counts) / distances.size
    return [(float(v), float(c)) for v, c in zip(values, cum)]


def mir(real, syn, hist_bins: int = DEFAULT_HIST_BINS, n_jobs=None) -> MirResult:
    """Distance from each real record to its closest synthetic record.

    Real rows with no codes are excluded everywhere (mean, median, exact
    matches, histogram, CDF). Larger distances mean lower membership risk.
    """
    R, S, _ = check_paired(real, syn)
    nonzero = R.any(axis=1)
    Rq = R[nonzero]
    if Rq.shape[0] == 0:
        raise UndefinedInputError("every real record is empty; MIR undefined")
    ham, _ = nearest_neighbors(Rq, S, n_jobs=n_jobs)
    d = np.sqrt(ham.astype(np.float64))
    return MirResult(
        mean=float(d.mean()),
        median=float(np.median(d)),
        distances=d,
        exact_match_fraction=float(np.mean(ham == 0)),
        histogram=distance_histogram(d, hist_bins),
        cdf_points=distance_cdf(d),
        n_excluded=int((~nonzero).sum()),
    )


# -- attribute inference ----------------------------------------------------


@dataclass
class AirResult:
    hidden_codes: list[str]
    f1_micro: float
    per_code: list[dict] = field(default_factory=list)
    balanced_codes: list[str] = field(default_factory=list)
    imbalanced_codes: list[str] = field(default_factory=list)
    imbalanced_rule: str = "farthest"

    def to_dict(self) -> dict:
        return {
            "f1": self.f1_micro,
            "hidden_codes": list(self.hidden_codes),
            "balanced_codes": list(self.balanced_codes),
            "imbalanced_codes": list(self.imbalanced_codes),
            "imbalanced_rule": self.imbalanced_rule,
            "per_code": self.per_code,
        }


IMBALANCED_RULES = ("farthest", "rarest")


def select_hidden_codes(
    prev, n_balanced: int = 10, n_imbalanced: int = 10, imbalanced_rule: str = "farthest"
) -> tuple[list[int], list[int]]:
    """Column indices of the balanced and imbalanced attributes to hide.

    Balanced: prevalence closest to 0.5. Imbalanced (``"farthest"``):
    prevalence farthest from 0.5; (``"rarest"``): smallest prevalence.
    Only codes with nonzero prevalence are eligible; ties go to the lower
    column index; codes already picked as balanced are skipped.
    """
    prev = np.asarray(prev, dtype=np.float64)
    if imbalanced_rule not in IMBALANCED_RULES:
        raise ConfigError(f"imbalanced_rule must be one of {IMBALANCED_RULES}")
    if n_balanced < 0 or n_imbalanced < 0:
        raise ConfigError("attribute counts must be >= 0")
    eligible = np.flatnonzero(prev > 0)
    if eligible.shape[0] < n_balanced + n_imbalanced:
        raise DataError(
            f"only {eligible.shape[0]} codes with nonzero prevalence; "
            f"need {n_balanced + n_imbalanced} distinct hidden attributes"
        )
    gap = np.abs(prev[eligible] - 0.5)
    balanced = eligible[np.argsort(gap, kind="stable")][:n_balanced].tolist()
    if imbalanced_rule == "farthest":
        order = eligible[np.argsort(-gap, kind="stable")]
    else:
        order = eligible[np.argsort(prev[eligible], kind="stable")]
    taken = set(balanced)
    imbalanced = [int(j) for j in order if j not in taken][:n_imbalanced]
    return [int(j) for j in balanced], imbalanced


def air(
    real,
    syn,
    n_balanced: int = 10,
    n_imbalanced: int = 10,
    hidden=None,
    imbalanced_rule: str = "farthest",
    n_jobs=None,
) -> AirResult:
    """Attribute-inference F1 of a 1-NN attacker.

    The attacker knows every column except the hidden ones, matches each
    real record to its nearest synthetic record on the known columns (ties
    to the lowest synthetic index), and copies the hidden values. Returns
    micro-F1 pooled over all hidden cells; lower means less leakage.

    ``hidden`` overrides the automatic selection (codes or column indices).
    """
    R, S, codes = check_paired(real, syn)
    k = R.shape[1]
    if hidden is None:
        if k <= n_balanced + n_imbalanced:
            raise DataError(f"K={k} must exceed the {n_balanced + n_imbalanced} hidden attributes")
        prev = R.sum(axis=0, dtype=np.int64) / R.shape[0]
        bal, imb = select_hidden_codes(prev, n_balanced, n_imbalanced, imbalanced_rule)
        hidden_idx = bal + imb
    else:
        lookup = {c: j for j, c in enumerate(codes)}
        hidden_idx = [lookup[h] if isinstance(h, str) else int(h) for h in hidden]
        bal, imb = [], []
        if len(set(hidden_idx)) != len(hidden_idx):
            raise ConfigError("hidden attributes contain duplicates")
    known = np.setdiff1d(np.arange(k), hidden_idx)
    hidden_arr = np.asarray(hidden_idx, dtype=np.intp)

    _, match = nearest_neighbors(R[:, known], S[:, known], n_jobs=n_jobs)
    pred = S[match][:, hidden_arr].astype(bool)
    truth = R[:, hidden_arr].astype(bool)
    tp_c = (pred & truth).sum(axis=0)
    fp_c = (pred & ~truth).sum(axis=0)
    fn_c = (~pred & truth).sum(axis=0)
    per_code = [
        {
            "code": codes[j],
            "prevalence": float(truth[:, i].mean()),
            "tp": int(tp_c[i]),
            "fp": int(fp_c[i]),
            "fn": int(fn_c[i]),
            "f1": f1_from_counts(int(tp_c[i]), int(fp_c[i]), int(fn_c[i])),
        }
        for i, j in enumerate(hidden_idx)
    ]
    return AirResult(
        hidden_codes=[codes[j] for j in hidden_idx],
        f1_micro=f1_from_counts(int(tp_c.sum()), int(fp_c.sum()), int(fn_c.sum())),
        per_code=per_code,
        balanced_codes=[codes[j] for j in bal],
        imbalanced_codes=[codes[j] for j in imb],
        imbalanced_rule=imbalanced_rule,
    )
