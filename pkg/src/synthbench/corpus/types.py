"""Core data containers: events, vocabularies, phenotype matrices, code maps."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from ..exceptions import ConfigError, DataError, VocabularyMismatchError


class CodeSystem(str, enum.Enum):
    ICD9 = "ICD9"
    ICD10 = "ICD10"
    SNOMED = "SNOMED"
    PHECODEX = "PHECODEX"

    @classmethod
    def parse(cls, value) -> "CodeSystem":
        if isinstance(value, cls):
            return value
        key = str(value).strip().upper().replace("-", "").replace("_", "")
        for member in cls:
            if member.value == key:
                return member
        raise ConfigError(f"unknown coding system tag {value!r}")


@dataclass(frozen=True)
class Event:
    patient_id: str
    code: str
    system: CodeSystem
    time: str | None = None


@dataclass(frozen=True)
class EventTable:
    """Longitudinal diagnosis events prior to aggregation.

    ``n_dropped`` counts input lines discarded at parse time (blank code).
    """

    events: tuple[Event, ...]
    n_dropped: int = 0

    def __post_init__(self):
        for ev in self.events:
            if not ev.patient_id or not ev.code:
                raise DataError(f"event with empty patient_id or code: {ev!r}")

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self) -> Iterator[Event]:
        return iter(self.events)

    @property
    def systems(self) -> set[CodeSystem]:
        return {ev.system for ev in self.events}

    @property
    def patient_ids(self) -> list[str]:
        """Distinct patient ids in order of first appearance."""
        return list(dict.fromkeys(ev.patient_id for ev in self.events))

    @classmethod
    def from_records(cls, records: Iterable[tuple], system="ICD9") -> "EventTable":
        system = CodeSystem.parse(system)
        events = []
        for rec in records:
            pid, code, *rest = rec
            time = rest[0] if rest else None
            events.append(Event(str(pid), str(code), system, time))
        return cls(tuple(events))


class Vocabulary(Sequence[str]):
    """Ordered, duplicate-free list of codes with code -> column lookup."""

    __slots__ = ("_codes", "_index")

    def __init__(self, codes: Iterable[str]):
        codes = tuple(str(c) for c in codes)
        index = {c: i for i, c in enumerate(codes)}
        if len(index) != len(codes):
            seen, dups = set(), []
            for c in codes:
                if c in seen:
                    dups.append(c)
                seen.add(c)
            raise DataError(f"duplicate codes in vocabulary: {sorted(set(dups))}")
        for c in codes:
            if not c or any(ch.isspace() for ch in c):
                raise DataError(f"invalid code {c!r}: codes must be nonempty without whitespace")
        self._codes = codes
        self._index = index

    def __getitem__(self, i):
        return self._codes[i]

    def __len__(self) -> int:
        return len(self._codes)

    def __contains__(self, code) -> bool:
        return code in self._index

    def __eq__(self, other) -> bool:
        if isinstance(other, Vocabulary):
            return self._codes == other._codes
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self._codes)

    def __repr__(self) -> str:
        head = ", ".join(self._codes[:5])
        more = ", ..." if len(self._codes) > 5 else ""
        return f"Vocabulary([{head}{more}], K={len(self)})"

    @property
    def codes(self) -> tuple[str, ...]:
        return self._codes

    def index(self, code: str) -> int:  # type: ignore[override]
        try:
            return self._index[code]
        except KeyError:
            raise KeyError(f"code {code!r} not in vocabulary") from None

    def indices(self, codes: Iterable[str]) -> np.ndarray:
        return np.array([self.index(c) for c in codes], dtype=np.intp)

    def get(self, code: str, default=None):
        return self._index.get(code, default)


def _as_csr(data, n_cols: int) -> sp.csr_matrix:
    mat = sp.csr_matrix(data, dtype=np.uint8)
    if mat.shape[1] != n_cols:
        raise DataError(f"matrix has {mat.shape[1]} columns but vocabulary has {n_cols} codes")
    mat.sum_duplicates()
    mat.eliminate_zeros()
    if mat.nnz and mat.data.max() > 1:
        raise DataError("phenotype matrix must be binary (0/1)")
    mat.sort_indices()
    return mat


class PhenotypeMatrix:
    """N x K binary presence/absence matrix with a code vocabulary.

    Stored as CSR; each row is the set of column indices equal to 1.
    Instances are treated as immutable.

    Parameters
    ----------
    data : array-like or sparse matrix of shape (n_rows, len(vocabulary))
        0/1 entries.
    vocabulary : Vocabulary or sequence of str
    patient_ids : sequence of str, optional
    """

    def __init__(self, data, vocabulary, patient_ids: Sequence[str] | None = None):
        if not isinstance(vocabulary, Vocabulary):
            vocabulary = Vocabulary(vocabulary)
        self.vocabulary = vocabulary
        if sp.issparse(data):
            self._csr = _as_csr(data, len(vocabulary))
        else:
            arr = np.asarray(data)
            if arr.size == 0:
                arr = arr.reshape(arr.shape[0] if arr.ndim >= 1 else 0, len(vocabulary))
            if arr.ndim != 2:
                raise DataError(f"expected a 2-D matrix, got shape {arr.shape}")
            if arr.size and not np.isin(arr, (0, 1)).all():
                raise DataError("phenotype matrix must be binary (0/1)")
            self._csr = _as_csr(arr.astype(np.uint8), len(vocabulary))
        if patient_ids is not None:
            patient_ids = tuple(str(p) for p in patient_ids)
            if len(patient_ids) != self._csr.shape[0]:
                raise DataError(
                    f"{len(patient_ids)} patient ids for {self._csr.shape[0]} rows"
                )
        self.patient_ids = patient_ids
        self._dense = None

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable[int]], vocabulary, patient_ids=None):
        """Build from per-row column index sets (duplicates collapse)."""
        if not isinstance(vocabulary, Vocabulary):
            vocabulary = Vocabulary(vocabulary)
        k = len(vocabulary)
        indptr, indices = [0], []
        for row in rows:
            idx = sorted(set(int(j) for j in row))
            if idx and (idx[0] < 0 or idx[-1] >= k):
                raise DataError(f"column index out of range [0, {k}) in row {len(indptr) - 1}")
            indices.extend(idx)
            indptr.append(len(indices))
        n = len(indptr) - 1
        csr = sp.csr_matrix(
            (np.ones(len(indices), dtype=np.uint8), np.asarray(indices, dtype=np.int64), indptr),
            shape=(n, k),
        )
        return cls(csr, vocabulary, patient_ids)

    # -- shape -----------------------------------------------------------
    @property
    def shape(self) -> tuple[int, int]:
        return self._csr.shape

    @property
    def n_rows(self) -> int:
        return self._csr.shape[0]

    @property
    def n_codes(self) -> int:
        return self._csr.shape[1]

    def __len__(self) -> int:
        return self.n_rows

    def __repr__(self) -> str:
        return f"PhenotypeMatrix(N={self.n_rows}, K={self.n_codes}, nnz={self._csr.nnz})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, PhenotypeMatrix):
            return NotImplemented
        return (
            self.vocabulary == other.vocabulary
            and self.patient_ids == other.patient_ids
            and self.shape == other.shape
            and (self._csr != other._csr).nnz == 0
        )

    __hash__ = None  # type: ignore[assignment]

    # -- access ----------------------------------------------------------
    @property
    def sparse(self) -> sp.csr_matrix:
        return self._csr

    def toarray(self) -> np.ndarray:
        """Dense uint8 copy-on-first-use view (cached, read-only)."""
        if self._dense is None:
            dense = self._csr.toarray().astype(np.uint8, copy=False)
            dense.setflags(write=False)
            self._dense = dense
        return self._dense

    def __array__(self, dtype=None, copy=None):
        arr = self.toarray()
        return arr.astype(dtype) if dtype is not None else arr.copy()

    def row_indices(self, i: int) -> tuple[int, ...]:
        start, stop = self._csr.indptr[i], self._csr.indptr[i + 1]
        return tuple(int(j) for j in self._csr.indices[start:stop])

    def rows(self) -> Iterator[tuple[int, ...]]:
        for i in range(self.n_rows):
            yield self.row_indices(i)

    def column_counts(self) -> np.ndarray:
        """Number of rows with a 1 in each column (int64)."""
        return np.bincount(self._csr.indices, minlength=self.n_codes).astype(np.int64)

    def row_counts(self) -> np.ndarray:
        return np.diff(self._csr.indptr).astype(np.int64)

    # -- derivation ------------------------------------------------------
    def take_rows(self, idx) -> "PhenotypeMatrix":
        idx = np.asarray(idx, dtype=np.intp).reshape(-1)
        ids = None if self.patient_ids is None else [self.patient_ids[i] for i in idx]
        return PhenotypeMatrix(self._csr[idx], self.vocabulary, ids)

    def select_codes(self, codes: Sequence[str]) -> "PhenotypeMatrix":
        """Restrict (and reorder) columns to ``codes``."""
        cols = self.vocabulary.indices(codes)
        return PhenotypeMatrix(self._csr[:, cols], Vocabulary(codes), self.patient_ids)

    def with_patient_ids(self, patient_ids) -> "PhenotypeMatrix":
        return PhenotypeMatrix(self._csr, self.vocabulary, patient_ids)

    @staticmethod
    def vstack(blocks: Sequence["PhenotypeMatrix"]) -> "PhenotypeMatrix":
        if not blocks:
            raise DataError("nothing to stack")
        vocab = blocks[0].vocabulary
        for b in blocks[1:]:
            if b.vocabulary != vocab:
                raise VocabularyMismatchError("cannot stack matrices with different vocabularies")
        ids = None
        if all(b.patient_ids is not None for b in blocks):
            ids = [p for b in blocks for p in b.patient_ids]
        return PhenotypeMatrix(sp.vstack([b.sparse for b in blocks], format="csr"), vocab, ids)


@dataclass(frozen=True)
class CodeMap:
    """One-to-many mapping between two coding systems.

    ``lookup`` returns ``None`` for an absent key, never an empty list.
    """

    table: Mapping[str, tuple[str, ...]]
    source: CodeSystem
    target: CodeSystem
    name: str = ""

    def __post_init__(self):
        for key, targets in self.table.items():
            if not targets:
                raise DataError(f"code map entry {key!r} has an empty target list")

    def lookup(self, code: str) -> tuple[str, ...] | None:
        return self.table.get(code)

    def __contains__(self, code) -> bool:
        return code in self.table

    def __len__(self) -> int:
        return len(self.table)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]], source, target, name="") -> "CodeMap":
        table: dict[str, list[str]] = {}
        for src, dst in pairs:
            targets = table.setdefault(src, [])
            if dst not in targets:
                targets.append(dst)
        return cls(
            {k: tuple(v) for k, v in table.items()},
            CodeSystem.parse(source),
            CodeSystem.parse(target),
            name,
        )


@dataclass(frozen=True)
class PatientInfo:
    age: int
    gender: str
    ethnicity: str


@dataclass(frozen=True)
class Demographics:
    """Per-patient demographics keyed by patient id."""

    records: Mapping[str, PatientInfo] = field(default_factory=dict)

    def __post_init__(self):
        for pid, info in self.records.items():
            if info.age < 0:
                raise DataError(f"negative age for patient {pid!r}")

    def __contains__(self, pid) -> bool:
        return pid in self.records

    def __getitem__(self, pid) -> PatientInfo:
        return self.records[pid]

    def __len__(self) -> int:
        return len(self.records)


def align_vocabularies(
    real: PhenotypeMatrix, syn: PhenotypeMatrix
) -> tuple[PhenotypeMatrix, PhenotypeMatrix, dict]:
    """Restrict both matrices to their shared codes, in ``real``'s column order.

    Returns the restricted pair and ``{"k", "dropped_real", "dropped_syn"}``.
    """
    if real.vocabulary == syn.vocabulary:
        return real, syn, {"k": real.n_codes, "dropped_real": [], "dropped_syn": []}
    shared = [c for c in real.vocabulary if c in syn.vocabulary]
    if not shared:
        raise VocabularyMismatchError("real and synthetic vocabularies share no codes")
    shared_set = set(shared)
    info = {
        "k": len(shared),
        "dropped_real": [c for c in real.vocabulary if c not in shared_set],
        "dropped_syn": [c for c in syn.vocabulary if c not in shared_set],
    }
    return real.select_codes(shared), syn.select_codes(shared), info
