"""Aggregate sweep records into per-config summaries and long-format run tables."""

from __future__ import annotations

import csv
import json
from collections import OrderedDict, defaultdict
from dataclasses import asdict
from pathlib import Path
from typing import Iterable

from .metrics import DEFAULT_TIMEOUT, UndefinedCorrelation, agile_value, pearson
from .sweep import RunRecord

CENSORED_SIZE = 1e6
CENSORED_TRAIN_SECONDS = 300.0
SUMMARY_FIELDS = ("config", "problems", "coverage", "agile", "train_seconds", "model_size", "eval", "censored")
RUN_FIELDS = tuple(RunRecord.__dataclass_fields__)


def summarise(records: Iterable[RunRecord], timeout: float = DEFAULT_TIMEOUT) -> list[dict]:
    """One row per config in first-seen order; configs without a model get censored values."""
    groups: "OrderedDict[str, list]" = OrderedDict()
    for r in records:
        groups.setdefault(r.config, []).append(r)
    rows = []
    for config, rs in groups.items():
        with_model = [r for r in rs if r.model_size is not None]
        censored = not with_model
        first = with_model[0] if with_model else None
        rows.append({
            "config": config,
            "problems": len(rs),
            "coverage": sum(1 for r in rs if r.solved),
            "agile": sum(agile_value(r.wall_seconds, r.solved, timeout) for r in rs),
            "train_seconds": CENSORED_TRAIN_SECONDS if censored else first.train_seconds,
            "model_size": CENSORED_SIZE if censored else first.model_size,
            "eval": None if censored else first.train_eval,
            "censored": censored,
        })
    return rows


def emit_report(records: Iterable[RunRecord], output_dir, fmt: str = "csv",
                timeout: float = DEFAULT_TIMEOUT) -> list[Path]:
    """Write ``summary`` and ``runs`` tables as csv or json; returns the written paths."""
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown report format {fmt!r}")
    records = list(records)
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = summarise(records, timeout)
    runs = [asdict(r) for r in records]
    paths = [out / f"summary.{fmt}", out / f"runs.{fmt}"]
    if fmt == "json":
        paths[0].write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
        paths[1].write_text(json.dumps(runs, indent=1, sort_keys=True) + "\n")
        return paths
    with open(paths[0], "w", newline="") as f:
        f.write(f"# model_size={CENSORED_SIZE:g} and train_seconds={CENSORED_TRAIN_SECONDS:g} mark censored configs\n")
        w = csv.DictWriter(f, fieldnames=SUMMARY_FIELDS)
        w.writeheader()
        w.writerows(summary)
    with open(paths[1], "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=RUN_FIELDS)
        w.writeheader()
        w.writerows(runs)
    return paths


def records_from_json(path) -> list[RunRecord]:
    return [RunRecord.from_dict(d) for d in json.loads(Path(path).read_text())]


def best_by_option(summary: list[dict]) -> dict:
    """For each hyperparameter and option, the best coverage over configs using it."""
    from .grid import parse_config_key

    best: dict = defaultdict(dict)
    for row in summary:
        cfg = parse_config_key(row["config"])
        for name, value in cfg.to_dict().items():
            cur = best[name].get(value)
            best[name][value] = row["coverage"] if cur is None else max(cur, row["coverage"])
    return {k: dict(v) for k, v in best.items()}


def correlations(summary: list[dict], metrics=("train_seconds", "model_size", "eval")) -> dict:
    """Pearson correlation between coverage and each training metric over configs."""
    out = {}
    for m in metrics:
        pts = [(row["coverage"], row[m]) for row in summary if row[m] is not None]
        try:
            res = pearson([p[0] for p in pts], [p[1] for p in pts])
            out[m] = {"r": res.r, "ci_low": res.ci_low, "ci_high": res.ci_high, "p_value": res.p_value,
                      "significant": res.significant, "n": res.n}
        except UndefinedCorrelation as exc:
            out[m] = {"error": str(exc), "n": len(pts)}
    return out
