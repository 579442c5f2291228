"""Sweep runner: train every config, plan every test problem, append one record per run."""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

from ..learn import save_model
from ..pddl import PDDLError, ground_actions, parse_domain, parse_problem
from ..pipeline import ModelConfig, WLHeuristic, train
from ..search import OracleError, SearchBudget, gbfs, validate_plan

log = logging.getLogger(__name__)

RESULTS_FILE = "results.jsonl"
MANIFEST_VERSION = 1


class ManifestError(ValueError):
    pass


@dataclass
class Budgets:
    plan_seconds: float = 60.0
    train_seconds: float = 300.0
    oracle_seconds: float = 60.0
    memory_mb: float = 4096.0


@dataclass
class Manifest:
    domain: Path
    train: list
    test: list
    budgets: Budgets = field(default_factory=Budgets)
    name: str = ""

    def load_domain_text(self) -> str:
        return self.domain.read_text()


def load_manifest(path) -> Manifest:
    """JSON with ``domain``, ``train``, ``test`` (paths relative to the manifest) and ``budgets``."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    base = path.parent
    try:
        budgets = Budgets(**data.get("budgets", {}))
        m = Manifest(base / data["domain"], [base / p for p in data["train"]], [base / p for p in data["test"]],
                     budgets, data.get("name", path.stem))
    except (KeyError, TypeError) as exc:
        raise ManifestError(f"malformed manifest {path}: {exc}") from exc
    if not m.train or not m.test:
        raise ManifestError("manifest needs at least one training and one testing problem")
    for p in [m.domain, *m.train, *m.test]:
        if not p.exists():
            raise ManifestError(f"manifest references missing file {p}")
    return m


@dataclass
class RunRecord:
    config: str
    domain: str
    problem: str
    solved: bool
    wall_seconds: Optional[float] = None
    plan_length: Optional[int] = None
    expansions: Optional[int] = None
    train_eval: Optional[float] = None
    train_seconds: Optional[float] = None
    model_size: Optional[int] = None
    status: str = "ok"
    error: str = ""

    @property
    def key(self) -> tuple:
        return self.config, self.problem

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "RunRecord":
        return cls(**data)


def read_records(path) -> list[RunRecord]:
    path = Path(path)
    if not path.exists():
        return []
    out = []
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        try:
            out.append(RunRecord.from_dict(json.loads(line)))
        except (json.JSONDecodeError, TypeError):
            log.warning("skipping truncated record line in %s", path)
    return out


class RecordWriter:
    """Single writer appending records with a flush per line."""

    def __init__(self, path):
        self.path = Path(path)
        self.lock = threading.Lock()

    def write(self, records: Iterable[RunRecord]):
        with self.lock, open(self.path, "a+", encoding="utf-8") as f:
            # a crash may have left a partial last line; start on a fresh one
            if f.tell() > 0:
                f.seek(f.tell() - 1)
                if f.read(1) != "\n":
                    f.write("\n")
            for r in records:
                f.write(r.to_json() + "\n")
            f.flush()
            os.fsync(f.fileno())


def _problem_id(path: Path) -> str:
    return path.stem


def run_config(config: ModelConfig, manifest: Manifest, model_dir: Optional[Path] = None,
               skip: frozenset = frozenset()) -> list[RunRecord]:
    """Train ``config`` on the manifest's training split and plan its test problems."""
    b = manifest.budgets
    domain_text = manifest.load_domain_text()
    domain = parse_domain(domain_text)
    todo = [p for p in manifest.test if (config.key, _problem_id(p)) not in skip]
    if not todo:
        return []

    def failed(status, error, metrics=None):
        return [RunRecord(config.key, domain.name, _problem_id(p), False, status=status, error=error,
                          **(metrics or {})) for p in todo]

    try:
        train_tasks = [parse_problem(p.read_text(), domain) for p in manifest.train]
        start = time.perf_counter()
        model = train(config, train_tasks, SearchBudget(b.oracle_seconds, max_memory_mb=b.memory_mb))
        train_seconds = time.perf_counter() - start
    except (PDDLError, OracleError, MemoryError, ValueError) as exc:
        return failed("train-failed", f"{type(exc).__name__}: {exc}")
    if train_seconds > b.train_seconds:
        return failed("train-timeout", f"training took {train_seconds:.1f}s")
    if model_dir is not None:
        save_model(model, model_dir / f"{config.key}.json")
    metrics = {"train_eval": model.metrics.get("eval"), "train_seconds": train_seconds, "model_size": model.size}

    records = []
    for p in todo:
        try:
            task = parse_problem(p.read_text(), domain)
            ground = ground_actions(task)
            h = WLHeuristic(model, task)
            result = gbfs(task, ground, h, SearchBudget(b.plan_seconds, max_memory_mb=b.memory_mb))
        except (PDDLError, MemoryError, ValueError) as exc:
            records.append(RunRecord(config.key, domain.name, _problem_id(p), False, status="plan-failed",
                                     error=f"{type(exc).__name__}: {exc}", **metrics))
            continue
        if result.solved:
            check = validate_plan(task, result.actions)
            if not check.valid:
                raise AssertionError(f"search returned an invalid plan for {p}: {check.reason}")
            records.append(RunRecord(config.key, domain.name, _problem_id(p), True, result.stats.wall_seconds,
                                     len(result), result.stats.expansions, **metrics))
        else:
            records.append(RunRecord(config.key, domain.name, _problem_id(p), False, result.stats.wall_seconds,
                                     None, result.stats.expansions, status=result.reason, **metrics))
    return records


def _run_config_job(args):
    config, manifest, model_dir, skip = args
    try:
        return run_config(config, manifest, model_dir, skip)
    except Exception as exc:  # a crashing config must not stop the sweep
        domain = parse_domain(manifest.load_domain_text()).name
        return [RunRecord(config.key, domain, _problem_id(p), False, status="error",
                          error=f"{type(exc).__name__}: {exc}") for p in manifest.test
                if (config.key, _problem_id(p)) not in skip]


def run_sweep(configs: Sequence[ModelConfig], manifest: Manifest, output_dir, workers: int = 1,
              save_models: bool = True) -> list[RunRecord]:
    """Run all configs, resuming from any records already in ``output_dir``.

    Returns every record in the results file after the run.
    """
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    results = out / RESULTS_FILE
    done = frozenset(r.key for r in read_records(results))
    model_dir = None
    if save_models:
        model_dir = out / "models"
        model_dir.mkdir(exist_ok=True)
    writer = RecordWriter(results)
    jobs = [(c, manifest, model_dir, done) for c in configs]
    if workers <= 1:
        for job in jobs:
            writer.write(_run_config_job(job))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for records in pool.map(_run_config_job, jobs):
                writer.write(records)
    return read_records(results)
