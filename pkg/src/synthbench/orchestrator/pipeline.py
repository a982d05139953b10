"""End-to-end evaluation: ingest -> map -> aggregate -> baselines -> metrics -> report."""

from __future__ import annotations

import hashlib
import logging
import time
from contextlib import contextmanager
from pathlib import Path

from .. import __version__
from .._random import derive_seed
from ..baselines import GenerationConfig, generate_pbr, generate_resample
from ..corpus import (
    EventSchema,
    PhenotypeMatrix,
    Vocabulary,
    aggregate,
    align_vocabularies,
    events_from_matrix,
    filter_cohort,
    load_code_map,
    load_demographics,
    map_codes,
    parse_events,
    prevalence,
    read_matrix,
    truncate_events,
)
from ..corpus.io import atomic_write_text
from ..exceptions import SynthBenchError
from ..fidelity import evaluate_fidelity
from ..privacy import air, mir
from ..utility import analytical_utility, per_code_tstr_sweep, predictive_utility
from .config import DatasetSpec, RunConfig
from .report import DIRECTIONS, TIMING_KEY, to_json, write_report

logger = logging.getLogger(__name__)


class StageError(SynthBenchError):
    """A pipeline stage failed; ``cause`` holds the original exception."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")


def _file_digest(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _events_for(spec: DatasetSpec, cfg: RunConfig):
    schema = EventSchema(
        patient_column=spec.patient_column,
        code_column=spec.code_column,
        system=spec.system,
        system_column=spec.system_column,
        time_column=spec.time_column,
    )
    return parse_events(cfg.resolve(spec.events), schema)


def _map_chain(events, spec: DatasetSpec, cfg: RunConfig, diagnostics: dict, label: str):
    maps = [load_code_map(cfg.resolve(m.path), m.source, m.target, name=m.path) for m in spec.maps]
    if maps:
        events, report = map_codes(events, maps)
        diagnostics[f"{label}_unmapped"] = report.to_dict()
    if spec.truncate_parents:
        events = truncate_events(events)
    return events


def load_dataset(spec: DatasetSpec, cfg: RunConfig, vocab_policy="from_data", min_patients=0,
                 diagnostics: dict | None = None, label: str = "real") -> PhenotypeMatrix:
    """Materialise a cohort described by ``spec`` as a phenotype matrix."""
    diagnostics = {} if diagnostics is None else diagnostics
    if spec.matrix is not None:
        matrix = read_matrix(cfg.resolve(spec.matrix))
        if isinstance(vocab_policy, Vocabulary):
            have = set(matrix.vocabulary.codes)
            matrix = matrix.select_codes([c for c in vocab_policy.codes if c in have])
        elif min_patients > 0:
            keep = matrix.column_counts() >= min_patients
            matrix = matrix.select_codes([c for c, k in zip(matrix.vocabulary.codes, keep) if k])
    else:
        events = _events_for(spec, cfg)
        diagnostics[f"{label}_dropped_blank_codes"] = events.n_dropped
        events = _map_chain(events, spec, cfg, diagnostics, label)
        matrix = aggregate(events, vocab_policy, min_patients)
    if spec.cohort:
        demo = load_demographics(cfg.resolve(spec.demographics))
        matrix = filter_cohort(matrix, demo, spec.cohort)
    return matrix


class _Timer:
    def __init__(self):
        self.stages: dict[str, float] = {}

    @contextmanager
    def stage(self, name: str, partial: dict, cfg: RunConfig):
        t0 = time.perf_counter()
        try:
            yield
        except Exception as exc:
            _write_diagnostics(cfg, name, exc, partial)
            raise StageError(name, exc) from exc
        finally:
            self.stages[name] = time.perf_counter() - t0


def _write_diagnostics(cfg: RunConfig, stage: str, exc: BaseException, partial: dict):
    out = Path(cfg.resolve(cfg.output_dir))
    payload = {"failed_stage": stage, "error": f"{type(exc).__name__}: {exc}", "partial": partial}
    try:
        atomic_write_text(out / "diagnostics.json", lambda fh: fh.write(to_json(payload)))
    except OSError:  # pragma: no cover
        logger.exception("could not write diagnostics file")


def _generate(cfg: RunConfig, real: PhenotypeMatrix, timer: _Timer, diagnostics: dict):
    syn_spec = cfg.synthetic
    gen_cfg = GenerationConfig(syn_spec.n_samples, derive_seed(cfg.seed, "generate"))
    method = syn_spec.baseline.lower()
    workers = cfg.workers
    t0 = time.perf_counter()
    if syn_spec.generate_before_mapping:
        # generate in the source coding system, then push through the same map chain
        src_events = _events_for(cfg.real, cfg)
        src = aggregate(src_events)
        if method == "pbr":
            raw = generate_pbr(prevalence(src), gen_cfg, src.vocabulary, n_jobs=workers)
        else:
            raw = generate_resample(src, gen_cfg, n_jobs=workers)
        elapsed = time.perf_counter() - t0
        events = events_from_matrix(raw, system=next(iter(src_events.systems)))
        events = _map_chain(events, cfg.real, cfg, diagnostics, "synthetic")
        syn = aggregate(events, real.vocabulary)
        # rows whose codes all failed to map disappear from the event table; restore them
        if syn.n_rows < raw.n_rows:
            missing = raw.n_rows - syn.n_rows
            blank = PhenotypeMatrix.from_rows([[]] * missing, real.vocabulary,
                                              [f"empty{i}" for i in range(missing)])
            syn = PhenotypeMatrix.vstack([syn, blank])
    else:
        if method == "pbr":
            syn = generate_pbr(prevalence(real), gen_cfg, real.vocabulary, n_jobs=workers)
        else:
            syn = generate_resample(real, gen_cfg, n_jobs=workers)
        elapsed = time.perf_counter() - t0
    timer.stages["generation_only"] = elapsed
    return syn, elapsed


def run_pipeline(cfg: RunConfig, write: bool = True, report_path=None) -> dict:
    """Run every enabled stage and return the report dict.

    Each random stage draws from a sub-seed derived from ``cfg.seed``. The
    report's ``timing`` block is the only part that varies between
    identical runs.
    """
    cfg.validate()
    timer = _Timer()
    diagnostics: dict = {}
    report: dict = {
        "meta": {
            "tool": "synthbench",
            "version": __version__,
            "config_hash": cfg.config_hash(),
            "seed": cfg.seed,
            "method": cfg.synthetic.name,
        }
    }

    with timer.stage("ingest_real", report, cfg):
        vocab_policy = Vocabulary(cfg.vocabulary.codes) if cfg.vocabulary.codes else "from_data"
        real = load_dataset(cfg.real, cfg, vocab_policy, cfg.vocabulary.min_patients, diagnostics, "real")
        inputs = {}
        for label, spec in (("real", cfg.real), ("synthetic", cfg.synthetic)):
            for attr in ("matrix", "events", "demographics"):
                path = getattr(spec, attr, None)
                if path:
                    inputs[f"{label}.{attr}"] = _file_digest(cfg.resolve(path))
            for m in spec.maps:
                inputs[f"{label}.map.{m.path}"] = _file_digest(cfg.resolve(m.path))
        report["meta"]["inputs"] = inputs

    generation_sec = None
    with timer.stage("ingest_synthetic", report, cfg):
        if cfg.synthetic.baseline:
            syn, elapsed = _generate(cfg, real, timer, diagnostics)
            generation_sec = elapsed / syn.n_rows * 100.0
        elif cfg.synthetic.events is not None:
            syn = load_dataset(cfg.synthetic, cfg, real.vocabulary, 0, diagnostics, "synthetic")
        else:
            syn = load_dataset(cfg.synthetic, cfg, "from_data", 0, diagnostics, "synthetic")
        real_aligned, syn, vocab_info = align_vocabularies(real, syn)
        report["meta"]["vocabulary"] = {
            "k": vocab_info["k"],
            "k_real": real.n_codes,
            "dropped_real": vocab_info["dropped_real"],
            "dropped_syn": vocab_info["dropped_syn"],
        }
        report["meta"]["n_real"] = real_aligned.n_rows
        report["meta"]["n_syn"] = syn.n_rows
        real = real_aligned
    report["meta"]["diagnostics"] = diagnostics

    if cfg.metrics.fidelity:
        with timer.stage("fidelity", report, cfg):
            fid = evaluate_fidelity(
                real,
                syn,
                k_folds=cfg.fidelity.folds,
                seed=derive_seed(cfg.seed, "fidelity"),
                discriminator=cfg.fidelity.discriminator,
                reg=cfg.fidelity.reg,
                n_jobs=cfg.workers,
            )
            report["fidelity"] = fid.to_dict()

    if cfg.metrics.utility:
        with timer.stage("utility", report, cfg):
            u = cfg.utility
            block: dict = {}
            if u.outcome in real.vocabulary:
                block["predictive"] = predictive_utility(
                    real, syn, u.outcome, u.test_fraction, derive_seed(cfg.seed, "utility"),
                    u.stratify, u.reg, n_jobs=cfg.workers,
                ).to_dict()
            else:
                diagnostics["utility_skipped"] = f"outcome {u.outcome!r} not in vocabulary"
            analytical = []
            for outcome, predictor in u.analytical:
                if predictor not in real.vocabulary:
                    continue
                for label, mat in (("real", real), ("synthetic", syn)):
                    try:
                        res = analytical_utility(mat, outcome, predictor).to_dict()
                    except SynthBenchError as exc:
                        diagnostics.setdefault("analytical_skipped", []).append(
                            f"{outcome} ~ {predictor} ({label}): {exc}"
                        )
                        continue
                    res["data"] = label
                    analytical.append(res)
            block["analytical"] = analytical
            if u.sweep:
                block["sweep"] = per_code_tstr_sweep(
                    real, syn, min_prev=u.min_prev, n_codes=u.sweep,
                    seed=derive_seed(cfg.seed, "sweep"), reg=u.reg,
                ).to_dict()
            report["utility"] = block

    if cfg.metrics.privacy:
        with timer.stage("privacy", report, cfg):
            p = cfg.privacy
            m = mir(real, syn, hist_bins=p.hist_bins, n_jobs=cfg.workers)
            a = air(real, syn, p.n_balanced, p.n_imbalanced, imbalanced_rule=p.imbalanced_rule,
                    n_jobs=cfg.workers)
            report["privacy"] = {"mir": m.to_dict(), "air": a.to_dict()}

    report["directions"] = [
        {"metric": k, "direction": v}
        for k, v in DIRECTIONS.items()
        if k.split(".")[0] in report
    ]
    report[TIMING_KEY] = {
        "stages": dict(timer.stages),
        "generation_sec_per_100": generation_sec,
    }

    if write:
        out = Path(cfg.resolve(cfg.output_dir))
        path = Path(report_path) if report_path else out / f"report.{cfg.report_format}"
        write_report(report, path, cfg.report_format)
        if "privacy" in report:
            _write_plot_tables(report, path.parent)
    return report


def _write_plot_tables(report: dict, out: Path):
    mir_block = report["privacy"]["mir"]
    hist = mir_block["histogram"]

    def emit_hist(fh):
        fh.write("bin_left,bin_right,count\n")
        for lo, hi, c in zip(hist["edges"][:-1], hist["edges"][1:], hist["counts"]):
            fh.write(f"{lo!r},{hi!r},{c}\n")

    def emit_cdf(fh):
        fh.write("distance,cumulative_fraction\n")
        for x, q in mir_block["cdf"]:
            fh.write(f"{x!r},{q!r}\n")

    atomic_write_text(out / "mir_histogram.csv", emit_hist)
    atomic_write_text(out / "mir_cdf.csv", emit_cdf)
