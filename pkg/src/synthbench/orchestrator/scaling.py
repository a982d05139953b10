"""Metric curves over synthetic size (M) or real training size (N)."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .._random import derive_seed, make_rng
from ..baselines import make_generator
from ..corpus import PhenotypeMatrix
from ..corpus.io import atomic_write_text
from ..exceptions import ConfigError, DataError
from ..fidelity import mmd_max
from ..ml import train_test_split
from ..privacy import air
from ..utility import DEFAULT_OUTCOME, predictive_utility

AXES = ("m", "n")
CURVE_METRICS = ("mmd", "auc_tstr", "air_f1")


@dataclass
class CurvePoint:
    value: int
    replicates: list[dict]

    def summary(self) -> dict:
        row = {"grid_value": self.value, "replicates": len(self.replicates)}
        for name in CURVE_METRICS:
            vals = np.array([r[name] for r in self.replicates if r[name] is not None], dtype=float)
            row[f"{name}_mean"] = float(vals.mean()) if vals.size else None
            row[f"{name}_sd"] = float(vals.std(ddof=1)) if vals.size > 1 else (0.0 if vals.size else None)
            row[f"{name}_n"] = int(vals.size)
        return row


def _one_replicate(real, axis, value, rep, method, n_samples, seed, outcome, test_fraction,
                   n_balanced, n_imbalanced):
    if axis == "n":
        pick = make_rng(seed, "scale_rows", value, rep).choice(real.n_rows, size=value, replace=False)
        data = real.take_rows(np.sort(pick))
        m = n_samples
    else:
        data = real
        m = value
    split_seed = derive_seed(seed, "scale_split", value, rep)
    has_outcome = outcome is not None and outcome in data.vocabulary
    if has_outcome:
        y = data.sparse[:, data.vocabulary.index(outcome)].toarray().ravel()
        train, _ = train_test_split(y, test_fraction, split_seed)
        train_rows = data.take_rows(train)
    else:
        train_rows = data
    gen = make_generator(method, n_samples=m, random_state=derive_seed(seed, "scale_gen", value, rep))
    syn = gen.fit_sample(train_rows)

    out = {"grid_value": value, "replicate": rep, "mmd": mmd_max(train_rows, syn)}
    out["auc_tstr"] = None
    if has_outcome:
        res = predictive_utility(data, syn, outcome, test_fraction, split_seed, scenarios=("tstr",))
        out["auc_tstr"] = res.auc_tstr
    try:
        out["air_f1"] = air(train_rows, syn, n_balanced, n_imbalanced).f1_micro
    except DataError:
        out["air_f1"] = None
    return out


def run_scaling_experiment(
    real: PhenotypeMatrix,
    axis: str = "m",
    grid=None,
    method: str = "resample",
    replicates: int = 5,
    seed: int = 0,
    n_samples: int = 50_000,
    outcome: str | None = DEFAULT_OUTCOME,
    test_fraction: float = 0.2,
    n_balanced: int = 10,
    n_imbalanced: int = 10,
    n_jobs=None,
) -> list[dict]:
    """Mean and sd of MMD, TSTR AUC and AIR F1 at each grid point.

    ``axis="m"`` varies the number of generated rows; ``axis="n"`` draws
    that many real rows (without replacement) and always generates
    ``n_samples``. Each replicate has its own derived seed, so the table
    is the same for any ``n_jobs``. Metrics that cannot be computed (no
    outcome column, too few codes for AIR) come back as ``None``.
    """
    axis = axis.lower()
    if axis not in AXES:
        raise ConfigError(f"axis must be one of {AXES}")
    if not grid:
        raise ConfigError("grid must be nonempty")
    if replicates < 1:
        raise ConfigError("replicates must be >= 1")
    grid = [int(g) for g in grid]
    if min(grid) < 1:
        raise ConfigError("grid values must be >= 1")
    if axis == "n":
        too_big = [g for g in grid if g > real.n_rows]
        if too_big:
            raise DataError(f"N-grid points {too_big} exceed the {real.n_rows} real rows")
    tasks = [(g, r) for g in grid for r in range(replicates)]

    def work(task):
        g, r = task
        return _one_replicate(real, axis, g, r, method, n_samples, seed, outcome, test_fraction,
                              n_balanced, n_imbalanced)

    if n_jobs and n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(work, tasks))
    else:
        results = [work(t) for t in tasks]
    table = []
    for g in grid:
        reps = [res for res in results if res["grid_value"] == g]
        table.append(CurvePoint(g, reps).summary())
    return table


def scaling_from_config(cfg, real: PhenotypeMatrix) -> list[dict]:
    s = cfg.scaling
    grid = s.m_grid if s.axis == "m" else s.n_grid
    return run_scaling_experiment(
        real,
        axis=s.axis,
        grid=grid,
        method=s.method,
        replicates=s.replicates,
        seed=derive_seed(cfg.seed, "scaling"),
        n_samples=s.n_samples,
        outcome=cfg.utility.outcome,
        test_fraction=cfg.utility.test_fraction,
        n_balanced=cfg.privacy.n_balanced,
        n_imbalanced=cfg.privacy.n_imbalanced,
        n_jobs=cfg.workers,
    )


def write_curve_csv(table: list[dict], path) -> None:
    """Plot-ready curve table, one row per grid point."""
    if not table:
        raise DataError("empty curve table")
    cols = list(table[0])

    def fmt(v):
        if v is None or (isinstance(v, float) and not math.isfinite(v)):
            return ""
        return repr(v) if isinstance(v, float) else str(v)

    def emit(fh):
        fh.write(",".join(cols) + "\n")
        for row in table:
            fh.write(",".join(fmt(row[c]) for c in cols) + "\n")

    atomic_write_text(path, emit)
