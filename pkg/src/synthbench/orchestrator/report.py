"""Report serialisation (JSON / flattened CSV) and schema validation."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema

from ..corpus.io import atomic_write_text
from ..exceptions import ConfigError, DataError

TIMING_KEY = "timing"

#: direction of each rankable scalar, keyed by dotted report path
DIRECTIONS = {
    "fidelity.mmd": "lower",
    "fidelity.rmspe": "lower",
    "fidelity.mape": "lower",
    "fidelity.cfd": "lower",
    "fidelity.cofd": "lower",
    "fidelity.disc_auc": "lower",
    "fidelity.disc_acc": "lower",
    "utility.predictive.deltas.auc_tstr_minus_trtr": "higher",
    "utility.predictive.deltas.acc_tstr_minus_trtr": "higher",
    "utility.predictive.deltas.auc_tsrtr_minus_trtr": "higher",
    "utility.predictive.deltas.acc_tsrtr_minus_trtr": "higher",
    "privacy.mir.mean": "higher",
    "privacy.mir.median": "higher",
    "privacy.mir.exact_match_fraction": "lower",
    "privacy.air.f1": "lower",
}


def _clean(obj):
    """Make a report JSON-safe: NaN/inf -> None, tuples -> lists, numpy scalars -> Python."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def to_json(report: dict) -> str:
    return json.dumps(_clean(report), indent=2, sort_keys=True) + "\n"


def metric_blocks(report: dict) -> dict:
    """Everything except the timing block."""
    return {k: v for k, v in report.items() if k != TIMING_KEY}


def metric_hash(report: dict) -> str:
    blob = json.dumps(_clean(metric_blocks(report)), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def flatten(report: dict, prefix: str = "") -> dict:
    """Scalar leaves reachable through objects, keyed by dotted path.

    Arrays are not flattened (they go to the dedicated plot CSVs).
    """
    out = {}
    for key in sorted(report):
        value = report[key]
        path = f"{prefix}{key}"
        if isinstance(value, dict):
            out.update(flatten(value, path + "."))
        elif isinstance(value, (list, tuple)):
            continue
        else:
            out[path] = value
    return out


def _unflatten(flat: dict) -> dict:
    root: dict = {}
    for path, value in flat.items():
        node = root
        parts = path.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
    return root


def _parse_cell(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        raise DataError(f"CSV cell is not a JSON literal: {text!r}") from None


def to_csv(report: dict) -> str:
    flat = flatten(_clean(report))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(flat))
    # cells hold JSON literals so types survive the round trip
    writer.writerow([json.dumps(v) for v in flat.values()])
    return buf.getvalue()


def write_report(report: dict, path, fmt: str | None = None) -> Path:
    """Write ``report`` atomically as JSON or single-row CSV (dotted column names)."""
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".") or "json").lower()
    if fmt == "json":
        text = to_json(report)
    elif fmt == "csv":
        text = to_csv(report)
    else:
        raise ConfigError(f"unknown report format {fmt!r}")
    atomic_write_text(path, lambda fh: fh.write(text))
    return path


def load_schema() -> dict:
    with resources.files("synthbench").joinpath("report.schema.json").open("r", encoding="utf-8") as fh:
        return json.load(fh)


def read_report(path) -> dict:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".csv":
        rows = list(csv.reader(io.StringIO(text)))
        if len(rows) != 2 or len(rows[0]) != len(rows[1]):
            raise DataError(f"{path}: expected a header row and one value row")
        try:
            return _unflatten({k: _parse_cell(v) for k, v in zip(rows[0], rows[1])})
        except DataError as exc:
            raise DataError(f"{path}: {exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON: {exc}") from None


@dataclass
class ValidationResult:
    ok: bool
    errors: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


def validate_report_data(report: dict) -> ValidationResult:
    validator = jsonschema.Draft7Validator(load_schema())
    errors = []
    for err in sorted(validator.iter_errors(report), key=lambda e: [str(p) for p in e.absolute_path]):
        where = ".".join(str(p) for p in err.absolute_path) or "<root>"
        errors.append(f"{where}: {err.message}")
    return ValidationResult(not errors, errors)


def validate_report(path) -> ValidationResult:
    """Check a written report (JSON or CSV) against the bundled schema."""
    try:
        report = read_report(path)
    except (DataError, OSError) as exc:
        return ValidationResult(False, [str(exc)])
    return validate_report_data(report)
