"""Longitudinal events -> cross-sectional phenotype matrices, plus cohort filters."""

from __future__ import annotations

import ast
import operator
from collections import defaultdict
from typing import Callable

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ..exceptions import ConfigError, DataError, UndefinedInputError
from .types import Demographics, EventTable, PatientInfo, PhenotypeMatrix, Vocabulary

FROM_DATA = "from_data"


def _patient_code_sets(events: EventTable) -> dict[str, set[str]]:
    sets: dict[str, set[str]] = defaultdict(set)
    for ev in events:
        sets[ev.patient_id].add(ev.code)
    return sets


def aggregate(events: EventTable, vocab_policy=FROM_DATA, min_patients: int = 0) -> PhenotypeMatrix:
    """Collapse events to one binary row per patient.

    Parameters
    ----------
    events : EventTable
        Events in a single coding system.
    vocab_policy : "from_data" or Vocabulary
        ``"from_data"`` keeps codes seen in at least ``min_patients`` patients,
        sorted lexicographically. A fixed :class:`Vocabulary` ignores codes
        outside it.
    min_patients : int
        Support threshold for ``"from_data"``.

    Patients whose codes all fall outside the vocabulary are kept as all-zero
    rows. Rows follow first appearance of each patient id.
    """
    return PhenotypeAggregator(vocab_policy, min_patients).fit_transform(events)


class PhenotypeAggregator(TransformerMixin, BaseEstimator):
    """Transformer turning an :class:`EventTable` into a :class:`PhenotypeMatrix`.

    ``fit`` learns ``vocabulary_``; ``transform`` can then be applied to other
    event tables so real and synthetic cohorts share columns.
    """

    def __init__(self, vocab_policy=FROM_DATA, min_patients: int = 0):
        self.vocab_policy = vocab_policy
        self.min_patients = min_patients

    def fit(self, events: EventTable, y=None):
        systems = events.systems
        if len(systems) > 1:
            raise DataError(f"events mix coding systems {sorted(s.value for s in systems)}")
        if self.min_patients < 0:
            raise ConfigError("min_patients must be >= 0")
        if isinstance(self.vocab_policy, str):
            if self.vocab_policy.lower() != FROM_DATA:
                raise ConfigError(f"unknown vocab_policy {self.vocab_policy!r}")
            support: dict[str, int] = defaultdict(int)
            for codes in _patient_code_sets(events).values():
                for c in codes:
                    support[c] += 1
            kept = sorted(c for c, n in support.items() if n >= self.min_patients)
            self.vocabulary_ = Vocabulary(kept)
        else:
            vocab = self.vocab_policy
            if not isinstance(vocab, Vocabulary):
                vocab = Vocabulary(vocab)
            if len(vocab) == 0:
                raise ConfigError("FIXED vocabulary is empty")
            self.vocabulary_ = vocab
        return self

    def transform(self, events: EventTable) -> PhenotypeMatrix:
        check_is_fitted(self, "vocabulary_")
        vocab = self.vocabulary_
        sets = _patient_code_sets(events)
        ids = list(sets)
        rows = [[j for j in (vocab.get(c) for c in sets[pid]) if j is not None] for pid in ids]
        return PhenotypeMatrix.from_rows(rows, vocab, ids)


def prevalence(matrix) -> np.ndarray:
    """Column means of a phenotype matrix (fraction of rows with each code)."""
    if isinstance(matrix, PhenotypeMatrix):
        n = matrix.n_rows
        if n == 0:
            raise UndefinedInputError("prevalence of an empty matrix is undefined")
        return matrix.column_counts() / n
    arr = np.asarray(matrix)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise UndefinedInputError("prevalence needs a 2-D matrix with at least one row")
    return arr.sum(axis=0, dtype=np.int64) / arr.shape[0]


# -- cohort predicates ---------------------------------------------------

_FIELDS = ("age", "gender", "ethnicity")
_CMP = {
    ast.Eq: operator.eq,
    ast.NotEq: operator.ne,
    ast.Lt: operator.lt,
    ast.LtE: operator.le,
    ast.Gt: operator.gt,
    ast.GtE: operator.ge,
    ast.In: lambda a, b: a in b,
    ast.NotIn: lambda a, b: a not in b,
}


def compile_predicate(expr: str) -> Callable[[PatientInfo], bool]:
    """Compile a restricted boolean expression over ``age``, ``gender``, ``ethnicity``.

    Supports comparisons, ``and``/``or``/``not``, number and string literals,
    and tuples for ``in``. Bare identifiers other than the three fields are
    read as strings, so ``gender == Female`` works.

    >>> compile_predicate("age > 50 and gender == F")(PatientInfo(60, "F", "x"))
    True
    """
    try:
        tree = ast.parse(expr.strip(), mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse cohort predicate {expr!r}: {exc.msg}") from None

    def ev(node, info: PatientInfo):
        if isinstance(node, ast.Expression):
            return ev(node.body, info)
        if isinstance(node, ast.BoolOp):
            vals = (ev(v, info) for v in node.values)
            return all(vals) if isinstance(node.op, ast.And) else any(vals)
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.Not):
            return not ev(node.operand, info)
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
            return -ev(node.operand, info)
        if isinstance(node, ast.Compare):
            left = ev(node.left, info)
            for op, comp in zip(node.ops, node.comparators):
                right = ev(comp, info)
                fn = _CMP.get(type(op))
                if fn is None:
                    raise ConfigError(f"unsupported operator in {expr!r}")
                try:
                    ok = fn(left, right)
                except TypeError:
                    raise ConfigError(f"type mismatch in cohort predicate {expr!r}") from None
                if not ok:
                    return False
                left = right
            return True
        if isinstance(node, ast.Name):
            return getattr(info, node.id) if node.id in _FIELDS else node.id
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float, str)):
            return node.value
        if isinstance(node, (ast.Tuple, ast.List)):
            return tuple(ev(e, info) for e in node.elts)
        raise ConfigError(f"unsupported syntax in cohort predicate {expr!r}")

    # validate once against a dummy record so syntax errors surface early
    ev(tree, PatientInfo(0, "", ""))
    return lambda info: bool(ev(tree, info))


def filter_cohort(matrix: PhenotypeMatrix, demo: Demographics, predicate) -> PhenotypeMatrix:
    """Keep rows whose patient satisfies ``predicate`` (string expression or callable).

    Patients are matched to demographics by id. Row order and vocabulary are preserved.
    """
    if matrix.patient_ids is None:
        raise DataError("cohort filtering needs patient ids on the matrix")
    missing = [pid for pid in matrix.patient_ids if pid not in demo]
    if missing:
        raise DataError(f"{len(missing)} patients missing from demographics: {missing[:20]}")
    pred = compile_predicate(predicate) if isinstance(predicate, str) else predicate
    keep = [i for i, pid in enumerate(matrix.patient_ids) if pred(demo[pid])]
    return matrix.take_rows(keep)
