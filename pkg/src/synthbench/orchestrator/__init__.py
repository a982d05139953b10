"""Configuration, end-to-end runs, scaling curves, reports and ranking."""

from .config import RunConfig, config_from_dict, load_config
from .pipeline import StageError, load_dataset, run_pipeline
from .ranking import RankedMethod, rank_methods
from .report import (
    DIRECTIONS,
    ValidationResult,
    flatten,
    metric_blocks,
    metric_hash,
    read_report,
    to_csv,
    to_json,
    validate_report,
    validate_report_data,
    write_report,
)
from .scaling import run_scaling_experiment, scaling_from_config, write_curve_csv

__all__ = [
    "DIRECTIONS",
    "RankedMethod",
    "RunConfig",
    "StageError",
    "ValidationResult",
    "config_from_dict",
    "flatten",
    "load_config",
    "load_dataset",
    "metric_blocks",
    "metric_hash",
    "rank_methods",
    "read_report",
    "run_pipeline",
    "run_scaling_experiment",
    "scaling_from_config",
    "to_csv",
    "to_json",
    "validate_report",
    "validate_report_data",
    "write_curve_csv",
    "write_report",
]
