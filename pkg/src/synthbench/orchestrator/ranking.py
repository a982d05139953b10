"""Direction-aware ranking of methods from their reports."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from ..exceptions import ConfigError, DataError
from .report import DIRECTIONS, flatten


@dataclass
class RankedMethod:
    method: str
    score: float
    ranks: dict[str, float]
    values: dict[str, float]

    def to_dict(self) -> dict:
        return {"method": self.method, "score": self.score, "ranks": self.ranks, "values": self.values}


def _directions(report: dict) -> dict:
    d = dict(DIRECTIONS)
    for item in report.get("directions", []):
        d[item["metric"]] = item["direction"]
    return d


def _method_name(report: dict, i: int) -> str:
    return str(report.get("meta", {}).get("method", f"method{i}"))


def rank_methods(reports: list[dict], weights: dict[str, float] | None = None) -> list[RankedMethod]:
    """Order methods by weighted mean per-metric rank (1 = best).

    Per-metric ranks respect each metric's direction and share the average
    rank on ties. Total ties are broken by method name. ``weights`` maps
    dotted metric paths to nonnegative weights; by default every metric
    with a known direction that the first report carries gets weight 1.
    """
    if not reports:
        raise DataError("no reports to rank")
    flats = [flatten(r) for r in reports]
    names = [_method_name(r, i) for i, r in enumerate(reports)]
    if len(set(names)) != len(names):
        raise DataError(f"duplicate method names: {names}")
    directions = _directions(reports[0])
    if weights is None:
        weights = {m: 1.0 for m in directions if flats[0].get(m) is not None}
    if not weights:
        raise ConfigError("no metrics to rank on")
    for m, w in weights.items():
        if not isinstance(w, (int, float)) or w < 0 or not math.isfinite(w):
            raise ConfigError(f"weight for {m!r} must be a nonnegative number")
        if m not in directions:
            raise ConfigError(f"metric {m!r} has no known direction")
    total = float(sum(weights.values()))
    if total <= 0:
        raise ConfigError("weights must sum to a positive number")

    missing = [
        f"{name}: {m}"
        for name, flat in zip(names, flats)
        for m in weights
        if flat.get(m) is None
    ]
    if missing:
        raise DataError("reports are missing metrics: " + "; ".join(missing))

    metric_ranks = {}
    for m in weights:
        vals = np.array([float(f[m]) for f in flats])
        signed = vals if directions[m] == "lower" else -vals
        metric_ranks[m] = rankdata(signed, method="average")

    out = []
    for i, name in enumerate(names):
        ranks = {m: float(metric_ranks[m][i]) for m in weights}
        score = sum(weights[m] * ranks[m] for m in weights) / total
        out.append(RankedMethod(name, score, ranks, {m: float(flats[i][m]) for m in weights}))
    out.sort(key=lambda r: (r.score, r.method))
    return out
