"""Command-line entry point: ``synth-bench <command> --config run.toml``.

Exit codes: 0 success, 2 configuration error, 3 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .corpus import write_matrix
from .corpus.io import atomic_write_text
from .exceptions import ConfigError, DataError
from .orchestrator import (
    StageError,
    config_from_dict,
    load_config,
    load_dataset,
    rank_methods,
    read_report,
    run_pipeline,
    scaling_from_config,
    validate_report,
    write_curve_csv,
)
from .orchestrator.config import MetricToggles
from .orchestrator.pipeline import _generate, _Timer
from .orchestrator.report import to_json

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3

logger = logging.getLogger("synthbench")


def _base_config(args):
    if args.config:
        return load_config(args.config)
    real = getattr(args, "real", None) or getattr(args, "input", None)
    if not real:
        raise ConfigError("give --config, or --real (and --syn) matrix files")
    data = {"real": {"matrix": str(Path(real).resolve())}}
    syn = getattr(args, "syn", None)
    if syn:
        data["synthetic"] = {"matrix": str(Path(syn).resolve()), "name": Path(syn).stem}
    else:
        method = getattr(args, "method", None) or "resample"
        data["synthetic"] = {"baseline": method, "name": method}
    return config_from_dict(data, base_dir=Path.cwd())


def _config(args):
    cfg = _base_config(args)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.workers is not None:
        cfg.workers = args.workers
    if args.output_dir is not None:
        cfg.output_dir = str(Path(args.output_dir).resolve())
    fmt = getattr(args, "format", None)
    out = getattr(args, "out", None)
    if not fmt and out and Path(out).suffix.lower() in (".json", ".csv"):
        fmt = Path(out).suffix.lower().lstrip(".")
    if fmt:
        cfg.report_format = fmt
    for flag, section, attr in _OVERRIDES:
        value = getattr(args, flag, None)
        if value is not None:
            setattr(getattr(cfg, section), attr, value)
    return cfg.validate()


# (argparse dest, config section, field)
_OVERRIDES = (
    ("folds", "fidelity", "folds"),
    ("outcome", "utility", "outcome"),
    ("sweep", "utility", "sweep"),
    ("test_fraction", "utility", "test_fraction"),
    ("hist_bins", "privacy", "hist_bins"),
    ("n_balanced", "privacy", "n_balanced"),
    ("n_imbalanced", "privacy", "n_imbalanced"),
    ("imbalanced_rule", "privacy", "imbalanced_rule"),
    ("axis", "scaling", "axis"),
    ("replicates", "scaling", "replicates"),
)


def _out_dir(cfg) -> Path:
    out = Path(cfg.resolve(cfg.output_dir))
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_ingest(args) -> int:
    cfg = _config(args)
    diagnostics: dict = {}
    real = load_dataset(cfg.real, cfg, "from_data", cfg.vocabulary.min_patients, diagnostics, "real")
    path = Path(args.out) if args.out else _out_dir(cfg) / "real.mat"
    write_matrix(real, path)
    atomic_write_text(path.with_name(path.stem + "_diagnostics.json"),
                      lambda fh: fh.write(to_json(diagnostics)))
    print(f"wrote {path} ({real.n_rows} patients x {real.n_codes} codes)")
    return EXIT_OK


def cmd_generate(args) -> int:
    cfg = _config(args)
    syn_spec = cfg.synthetic
    if args.method:
        syn_spec = replace(syn_spec, baseline=args.method, matrix=None, events=None)
    if args.n_samples:
        syn_spec = replace(syn_spec, n_samples=args.n_samples)
    if syn_spec.baseline is None:
        raise ConfigError("generate needs a baseline (config [synthetic].baseline or --method)")
    cfg = replace(cfg, synthetic=syn_spec).validate()
    real = load_dataset(cfg.real, cfg, "from_data", cfg.vocabulary.min_patients)
    syn, elapsed = _generate(cfg, real, _Timer(), {})
    path = Path(args.out) if args.out else _out_dir(cfg) / f"{syn_spec.baseline.lower()}.mat"
    write_matrix(syn, path)
    print(f"wrote {path} ({syn.n_rows} rows, {elapsed / syn.n_rows * 100:.6f} s per 100 samples)")
    return EXIT_OK


def _evaluate(args, toggles: MetricToggles | None) -> int:
    cfg = _config(args)
    if toggles is not None:
        cfg = replace(cfg, metrics=toggles)
    _out_dir(cfg)
    report = run_pipeline(cfg, report_path=args.out)
    path = args.out or Path(cfg.resolve(cfg.output_dir)) / f"report.{cfg.report_format}"
    print(f"wrote {path} (config {report['meta']['config_hash'][:12]})")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    return _evaluate(args, None)


def cmd_fidelity(args) -> int:
    return _evaluate(args, MetricToggles(fidelity=True, utility=False, privacy=False))


def cmd_utility(args) -> int:
    return _evaluate(args, MetricToggles(fidelity=False, utility=True, privacy=False))


def cmd_privacy(args) -> int:
    return _evaluate(args, MetricToggles(fidelity=False, utility=False, privacy=True))


def cmd_scale(args) -> int:
    cfg = _config(args)
    if args.method:
        cfg.scaling.method = args.method
    if args.grid:
        try:
            grid = [int(g) for g in args.grid.split(",") if g.strip()]
        except ValueError:
            raise ConfigError(f"--grid must be comma-separated integers, got {args.grid!r}") from None
        if cfg.scaling.axis == "m":
            cfg.scaling.m_grid = grid
        else:
            cfg.scaling.n_grid = grid
    real = load_dataset(cfg.real, cfg, "from_data", cfg.vocabulary.min_patients)
    table = scaling_from_config(cfg, real)
    path = Path(args.out) if args.out else _out_dir(cfg) / f"scaling_{cfg.scaling.axis}.csv"
    write_curve_csv(table, path)
    print(f"wrote {path} ({len(table)} grid points)")
    return EXIT_OK


def _parse_weights(items) -> dict | None:
    if not items:
        return None
    weights = {}
    for item in items:
        name, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"weight {item!r} is not metric=value")
        try:
            weights[name] = float(value)
        except ValueError:
            raise ConfigError(f"weight {item!r} has a non-numeric value") from None
    return weights


def cmd_rank(args) -> int:
    reports = [read_report(p) for p in args.reports]
    ranking = rank_methods(reports, _parse_weights(args.weight))
    payload = [r.to_dict() for r in ranking]
    if args.output:
        atomic_write_text(args.output, lambda fh: fh.write(to_json({"ranking": payload})))
    for pos, r in enumerate(ranking, 1):
        print(f"{pos}\t{r.method}\t{r.score:.4f}")
    return EXIT_OK


def cmd_validate(args) -> int:
    status = EXIT_OK
    for path in args.reports:
        result = validate_report(path)
        if result:
            print(f"{path}: valid")
        else:
            status = EXIT_DATA
            print(f"{path}: INVALID")
            for err in result.errors:
                print(f"  {err}")
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="synth-bench", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def run_cmd(name, fn, help_text, report=False):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="TOML run configuration")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--workers", type=int, help="worker threads")
        p.add_argument("--output-dir", help="override the config output_dir")
        p.add_argument("--out", help="output file")
        if report:
            p.add_argument("--real", help="real matrix file (instead of --config)")
            p.add_argument("--syn", help="synthetic matrix file (instead of --config)")
            p.add_argument("--format", choices=("json", "csv"), help="report format")
        p.set_defaults(func=fn)
        return p

    def fidelity_flags(p):
        p.add_argument("--folds", type=int)

    def utility_flags(p):
        p.add_argument("--outcome")
        p.add_argument("--sweep", type=int, help="number of codes for the per-code TSTR sweep")
        p.add_argument("--test-fraction", type=float)

    def privacy_flags(p):
        p.add_argument("--hist-bins", type=int)
        p.add_argument("--n-balanced", type=int)
        p.add_argument("--n-imbalanced", type=int)
        p.add_argument("--imbalanced-rule", choices=("farthest", "rarest"))

    run_cmd("ingest", cmd_ingest, "build the real phenotype matrix")
    g = run_cmd("generate", cmd_generate, "generate a baseline synthetic matrix")
    g.add_argument("--in", dest="input", help="real matrix file (instead of --config)")
    g.add_argument("--method", choices=("pbr", "resample"))
    g.add_argument("--m", "--n-samples", dest="n_samples", type=int, help="rows to generate")
    fidelity_flags(run_cmd("fidelity", cmd_fidelity, "fidelity metrics only", True))
    utility_flags(run_cmd("utility", cmd_utility, "utility metrics only", True))
    privacy_flags(run_cmd("privacy", cmd_privacy, "privacy metrics only", True))
    e = run_cmd("evaluate", cmd_evaluate, "full metric battery", True)
    for add in (fidelity_flags, utility_flags, privacy_flags):
        add(e)
    s = run_cmd("scale", cmd_scale, "metric curves over M or N")
    s.add_argument("--real", help="real matrix file (instead of --config)")
    s.add_argument("--axis", choices=("m", "n"))
    s.add_argument("--method", choices=("pbr", "resample"))
    s.add_argument("--grid", help="comma-separated grid values")
    s.add_argument("--replicates", type=int)
    utility_flags(s)
    privacy_flags(s)

    r = sub.add_parser("rank", help="rank methods from their reports")
    r.add_argument("reports", nargs="+")
    r.add_argument("--weight", action="append", metavar="METRIC=W",
                   help="e.g. privacy.air.f1=2 (repeatable; default: all metrics weight 1)")
    r.add_argument("--output", help="write the ranking as JSON")
    r.set_defaults(func=cmd_rank)

    v = sub.add_parser("validate", help="check reports against the bundled schema")
    v.add_argument("reports", nargs="+")
    v.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG if isinstance(exc.cause, ConfigError) else EXIT_DATA
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, OSError, json.JSONDecodeError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
