"""Sweep runner, grid validation, study metrics and reports."""

from .grid import Grid, check_config, expected_size, validate
from .metrics import agile_score, agile_value, coverage, pearson
from .report import emit_report, summarise
from .sweep import Manifest, RunRecord, load_manifest, run_sweep

__all__ = ["Grid", "check_config", "expected_size", "validate", "agile_score", "agile_value", "coverage",
           "pearson", "emit_report", "summarise", "Manifest", "RunRecord", "load_manifest", "run_sweep"]
