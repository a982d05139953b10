"""Run configuration, loaded from TOML.

Example::

    seed = 7
    output_dir = "out"
    report_format = "json"      # or "csv"
    workers = 1

    [real]
    events = "real_events.csv"
    system = "ICD9"
    maps = [
      { path = "icd9_icd10.tsv", source = "ICD9", target = "ICD10" },
      { path = "icd10_phecodex.tsv", source = "ICD10", target = "PHECODEX" },
    ]
    truncate_parents = true

    [synthetic]
    name = "Resample"
    baseline = "resample"       # or: matrix = "method.mat"
    n_samples = 50000

    [vocabulary]
    min_patients = 0

Relative paths resolve against the config file's directory.
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from ..exceptions import ConfigError

DEFAULT_M_GRID = (1_000, 2_000, 5_000, 10_000, 20_000, 50_000, 100_000, 200_000, 500_000)
DEFAULT_N_GRID = (1_000, 2_000, 5_000, 10_000, 15_000, 20_000, 25_000, 30_000, 35_000, 40_000)
DEFAULT_ANALYTICAL_TASKS = (("CA*", "EM_236"), ("EM_202", "CV_401"))


@dataclass
class MapSpec:
    path: str
    source: str
    target: str


@dataclass
class DatasetSpec:
    """Where a cohort comes from: a matrix file, or events plus a mapping chain."""

    matrix: str | None = None
    events: str | None = None
    system: str = "ICD9"
    patient_column: str = "pid"
    code_column: str = "code"
    system_column: str | None = None
    time_column: str | None = None
    maps: list[MapSpec] = field(default_factory=list)
    truncate_parents: bool = False
    demographics: str | None = None
    cohort: str | None = None

    def validate(self, label: str):
        if (self.matrix is None) == (self.events is None):
            raise ConfigError(f"[{label}] needs exactly one of 'matrix' or 'events'")
        if self.cohort and not self.demographics:
            raise ConfigError(f"[{label}] 'cohort' needs 'demographics'")


@dataclass
class SyntheticSpec(DatasetSpec):
    name: str = "synthetic"
    baseline: str | None = None
    n_samples: int = 50_000
    # draw the baseline from the real data in its source coding system,
    # then push it through the real map chain
    generate_before_mapping: bool = False

    def validate(self, label: str):
        sources = [x is not None for x in (self.matrix, self.events, self.baseline)]
        if sum(sources) != 1:
            raise ConfigError(f"[{label}] needs exactly one of 'matrix', 'events', 'baseline'")
        if self.baseline is not None and self.baseline.lower() not in ("pbr", "resample"):
            raise ConfigError(f"[{label}] unknown baseline {self.baseline!r}")
        if self.n_samples < 1:
            raise ConfigError(f"[{label}] n_samples must be >= 1")
        if self.generate_before_mapping and self.baseline is None:
            raise ConfigError(f"[{label}] generate_before_mapping needs 'baseline'")


@dataclass
class VocabularySpec:
    min_patients: int = 0
    codes: list[str] | None = None


@dataclass
class MetricToggles:
    fidelity: bool = True
    utility: bool = True
    privacy: bool = True


@dataclass
class FidelitySpec:
    folds: int = 5
    discriminator: bool = True
    reg: float | str = "auto"


@dataclass
class UtilitySpec:
    outcome: str = "CV_401"
    test_fraction: float = 0.2
    stratify: bool = True
    reg: float | str = "auto"
    analytical: list[list[str]] = field(default_factory=lambda: [list(t) for t in DEFAULT_ANALYTICAL_TASKS])
    sweep: int = 0
    min_prev: float = 0.1


@dataclass
class PrivacySpec:
    hist_bins: int = 50
    n_balanced: int = 10
    n_imbalanced: int = 10
    imbalanced_rule: str = "farthest"


@dataclass
class ScalingSpec:
    axis: str = "m"
    method: str = "resample"
    m_grid: list[int] = field(default_factory=lambda: list(DEFAULT_M_GRID))
    n_grid: list[int] = field(default_factory=lambda: list(DEFAULT_N_GRID))
    n_samples: int = 50_000
    replicates: int = 5


@dataclass
class RunConfig:
    real: DatasetSpec
    synthetic: SyntheticSpec
    seed: int = 0
    output_dir: str = "synthbench_out"
    report_format: str = "json"
    workers: int = 1
    vocabulary: VocabularySpec = field(default_factory=VocabularySpec)
    metrics: MetricToggles = field(default_factory=MetricToggles)
    fidelity: FidelitySpec = field(default_factory=FidelitySpec)
    utility: UtilitySpec = field(default_factory=UtilitySpec)
    privacy: PrivacySpec = field(default_factory=PrivacySpec)
    scaling: ScalingSpec = field(default_factory=ScalingSpec)
    base_dir: str = "."

    # fields that cannot change any metric value
    _UNHASHED = ("output_dir", "workers", "base_dir", "report_format")

    def validate(self) -> "RunConfig":
        self.real.validate("real")
        self.synthetic.validate("synthetic")
        if self.synthetic.generate_before_mapping and self.real.events is None:
            raise ConfigError("generate_before_mapping needs real 'events'")
        if self.report_format not in ("json", "csv"):
            raise ConfigError("report_format must be 'json' or 'csv'")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.fidelity.folds < 2:
            raise ConfigError("fidelity.folds must be >= 2")
        if self.scaling.axis not in ("m", "n"):
            raise ConfigError("scaling.axis must be 'm' or 'n'")
        if self.scaling.replicates < 1:
            raise ConfigError("scaling.replicates must be >= 1")
        return self

    def resolve(self, path: str | None) -> Path | None:
        if path is None:
            return None
        p = Path(path)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def to_dict(self) -> dict:
        d = asdict(self)
        return d

    def config_hash(self) -> str:
        d = {k: v for k, v in self.to_dict().items() if k not in self._UNHASHED}
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"), default=str)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _build(cls, data, label):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"[{label}] must be a table")
    known = set(cls.__dataclass_fields__)
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"[{label}] unknown keys: {sorted(unknown)}")
    data = dict(data)
    if "maps" in data:
        try:
            data["maps"] = [MapSpec(**m) for m in data["maps"]]
        except TypeError as exc:
            raise ConfigError(f"[{label}] bad map entry: {exc}") from None
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError(f"[{label}] {exc}") from None


def config_from_dict(data: dict, base_dir=".") -> RunConfig:
    data = dict(data)
    if "real" not in data or "synthetic" not in data:
        raise ConfigError("config needs [real] and [synthetic] tables")
    sections = {
        "real": DatasetSpec,
        "synthetic": SyntheticSpec,
        "vocabulary": VocabularySpec,
        "metrics": MetricToggles,
        "fidelity": FidelitySpec,
        "utility": UtilitySpec,
        "privacy": PrivacySpec,
        "scaling": ScalingSpec,
    }
    kwargs = {name: _build(cls, data.pop(name, None), name) for name, cls in sections.items()}
    top = {"seed", "output_dir", "report_format", "workers"}
    unknown = set(data) - top
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    cfg = RunConfig(**kwargs, **data, base_dir=str(base_dir))
    return cfg.validate()


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    return config_from_dict(data, base_dir=path.parent)
