"""Readers and writers for event CSVs, map TSVs, demographics, and matrices.

Matrix text format::

    K <int>
    vocab <code_1> <code_2> ... <code_K>
    <patient_id> <idx> <idx> ...
    ...

Column indices are 0-based and refer to the ``vocab`` line.
"""

from __future__ import annotations

import csv
import io
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import IO, TextIO

from ..exceptions import ConfigError, DataError, ParseError
from .types import (
    CodeMap,
    CodeSystem,
    Demographics,
    Event,
    EventTable,
    PatientInfo,
    PhenotypeMatrix,
    Vocabulary,
)


@dataclass(frozen=True)
class EventSchema:
    """Column-name configuration for event CSV files.

    ``system`` is the file-wide coding system; when ``system_column`` is set
    and present, its per-row value overrides it.
    """

    patient_column: str = "pid"
    code_column: str = "code"
    system: str = "ICD9"
    system_column: str | None = None
    time_column: str | None = None


def _open_text(source) -> tuple[TextIO, bool]:
    if isinstance(source, (str, os.PathLike)):
        return open(source, newline="", encoding="utf-8"), True
    return source, False


def parse_events(stream, schema: EventSchema | None = None) -> EventTable:
    """Parse a CSV event stream into an :class:`EventTable`.

    Rows with a blank code are dropped and counted in ``n_dropped``.
    Duplicate rows are kept; deduplication happens at aggregation.
    """
    schema = schema or EventSchema()
    default_system = CodeSystem.parse(schema.system)
    fh, owned = _open_text(stream)
    try:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError("missing header row", line=1) from None
        cols = {name: i for i, name in enumerate(header)}
        for required in (schema.patient_column, schema.code_column):
            if required not in cols:
                raise ConfigError(f"configured column {required!r} not in header {header}")
        if schema.time_column and schema.time_column not in cols:
            raise ConfigError(f"configured time column {schema.time_column!r} not in header")
        if schema.system_column and schema.system_column not in cols:
            raise ConfigError(f"configured system column {schema.system_column!r} not in header")
        i_pid, i_code = cols[schema.patient_column], cols[schema.code_column]
        i_time = cols.get(schema.time_column) if schema.time_column else None
        i_sys = cols.get(schema.system_column) if schema.system_column else None

        events: list[Event] = []
        dropped = 0
        for row in reader:
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"expected {len(header)} fields, found {len(row)}", line=reader.line_num
                )
            pid = row[i_pid].strip()
            code = row[i_code].strip()
            if not code:
                dropped += 1
                continue
            if not pid:
                raise ParseError("empty patient id", line=reader.line_num)
            system = default_system
            if i_sys is not None and row[i_sys].strip():
                system = CodeSystem.parse(row[i_sys])
            time = (row[i_time].strip() or None) if i_time is not None else None
            events.append(Event(pid, code, system, time))
    finally:
        if owned:
            fh.close()
    return EventTable(tuple(events), n_dropped=dropped)


def load_code_map(path, source, target, name: str | None = None) -> CodeMap:
    """Read a two-column TSV (``source_code<TAB>target_code``), one pair per line.

    Blank lines and lines starting with ``#`` are ignored.
    """
    pairs = []
    fh, owned = _open_text(path)
    try:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
                raise ParseError("expected 'source<TAB>target'", line=lineno)
            pairs.append((parts[0].strip(), parts[1].strip()))
    finally:
        if owned:
            fh.close()
    label = name if name is not None else (str(path) if owned else "")
    return CodeMap.from_pairs(pairs, source, target, label)


def load_demographics(
    path, id_column="pid", age_column="age", gender_column="gender", ethnicity_column="ethnicity"
) -> Demographics:
    fh, owned = _open_text(path)
    records = {}
    try:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ParseError("missing header row", line=1)
        for c in (id_column, age_column, gender_column, ethnicity_column):
            if c not in reader.fieldnames:
                raise ConfigError(f"demographics column {c!r} not in header")
        for row in reader:
            try:
                age = int(row[age_column])
            except (TypeError, ValueError):
                raise ParseError(f"bad age {row[age_column]!r}", line=reader.line_num) from None
            records[row[id_column].strip()] = PatientInfo(
                age, row[gender_column].strip(), row[ethnicity_column].strip()
            )
    finally:
        if owned:
            fh.close()
    return Demographics(records)


def write_matrix(matrix: PhenotypeMatrix, dest) -> None:
    """Serialize to the sparse text format. Paths are written atomically."""
    ids = matrix.patient_ids or [f"row{i}" for i in range(matrix.n_rows)]

    def _emit(fh: IO[str]):
        fh.write(f"K {matrix.n_codes}\n")
        fh.write("vocab " + " ".join(matrix.vocabulary.codes) + "\n")
        for pid, row in zip(ids, matrix.rows()):
            if row:
                fh.write(pid + " " + " ".join(map(str, row)) + "\n")
            else:
                fh.write(pid + "\n")

    if isinstance(dest, (str, os.PathLike)):
        atomic_write_text(dest, _emit)
    else:
        _emit(dest)


def read_matrix(source) -> PhenotypeMatrix:
    fh, owned = _open_text(source)
    try:
        header = fh.readline()
        parts = header.split()
        if len(parts) != 2 or parts[0] != "K":
            raise ParseError("expected 'K <int>' header", line=1)
        try:
            k = int(parts[1])
        except ValueError:
            raise ParseError(f"bad K value {parts[1]!r}", line=1) from None
        vocab_line = fh.readline().split()
        if not vocab_line or vocab_line[0] != "vocab":
            raise ParseError("expected 'vocab ...' line", line=2)
        codes = vocab_line[1:]
        if len(codes) != k:
            raise ParseError(f"K={k} but vocab lists {len(codes)} codes", line=2)
        ids, rows = [], []
        for lineno, line in enumerate(fh, start=3):
            fields = line.split()
            if not fields:
                continue
            ids.append(fields[0])
            try:
                idx = [int(t) for t in fields[1:]]
            except ValueError:
                raise ParseError("non-integer column index", line=lineno) from None
            if any(j < 0 or j >= k for j in idx):
                raise ParseError(f"column index out of range [0, {k})", line=lineno)
            rows.append(idx)
    finally:
        if owned:
            fh.close()
    return PhenotypeMatrix.from_rows(rows, Vocabulary(codes), ids)


def export_dense_csv(matrix: PhenotypeMatrix, dest) -> None:
    """Write a dense 0/1 CSV with a ``patient_id`` column and one column per code."""
    ids = matrix.patient_ids or [f"row{i}" for i in range(matrix.n_rows)]
    dense = matrix.toarray()

    def _emit(fh):
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["patient_id", *matrix.vocabulary.codes])
        for pid, row in zip(ids, dense):
            writer.writerow([pid, *row.tolist()])

    if isinstance(dest, (str, os.PathLike)):
        atomic_write_text(dest, _emit)
    else:
        _emit(dest)


def matrix_to_string(matrix: PhenotypeMatrix) -> str:
    buf = io.StringIO()
    write_matrix(matrix, buf)
    return buf.getvalue()


def atomic_write_text(path, emit) -> None:
    """Call ``emit(fh)`` on a temp file next to ``path`` and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            emit(fh)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def events_from_matrix(matrix: PhenotypeMatrix, system="PHECODEX") -> EventTable:
    """Re-expand a matrix into one event per nonzero cell."""
    system = CodeSystem.parse(system)
    ids = matrix.patient_ids or [f"row{i}" for i in range(matrix.n_rows)]
    codes = matrix.vocabulary.codes
    events = [
        Event(pid, codes[j], system) for pid, row in zip(ids, matrix.rows()) for j in row
    ]
    return EventTable(tuple(events))


__all__ = [
    "EventSchema",
    "parse_events",
    "load_code_map",
    "load_demographics",
    "write_matrix",
    "read_matrix",
    "export_dense_csv",
    "matrix_to_string",
    "atomic_write_text",
    "events_from_matrix",
]

