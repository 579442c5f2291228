"""Command line entry point: ``wlf <verb> ...``."""

from __future__ import annotations

import argparse
import contextlib
import json
import logging
import random
import sys
from pathlib import Path

import numpy as np

from .harness import grid as gridmod
from .harness.metrics import DEFAULT_TIMEOUT
from .harness.report import best_by_option, correlations, emit_report, summarise
from .harness.sweep import ManifestError, load_manifest, read_records, run_sweep
from .ilg import build_ilg
from .kernels import PairMemoryError
from .learn import ModelFileError, load_model, save_model
from .pddl import (GroundingLimitError, PDDLError, detect_static_predicates, ground_actions, load_task,
                   parse_domain)
from .pipeline import ConfigError, ModelConfig, WLHeuristic, blind_heuristic, train
from .search import EXHAUSTED, OracleError, SearchBudget, gbfs, uniform_cost_oracle

EXIT_OK = 0
EXIT_NO_PLAN = 1
EXIT_VALIDATION = 2
EXIT_RESOURCE = 3

log = logging.getLogger("wlfeatures")


class RNGUsed(AssertionError):
    pass


@contextlib.contextmanager
def forbid_rng():
    """Make every stdlib and numpy random entry point raise while active."""
    def trap(name):
        def f(*args, **kwargs):
            raise RNGUsed(f"random number generator used ({name}) under --seed-free")
        return f

    saved = []
    targets = [(random, n) for n in ("random", "randint", "randrange", "choice", "choices", "shuffle",
                                     "sample", "uniform", "gauss", "seed")]
    targets += [(np.random, n) for n in ("default_rng", "seed", "rand", "randn", "randint", "random",
                                         "choice", "permutation", "shuffle", "normal", "uniform")]
    for mod, name in targets:
        saved.append((mod, name, getattr(mod, name)))
        setattr(mod, name, trap(f"{mod.__name__}.{name}"))
    try:
        yield
    finally:
        for mod, name, fn in saved:
            setattr(mod, name, fn)


def _output_dir(args) -> Path:
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _budget(args) -> SearchBudget:
    return SearchBudget(args.timeout, max_memory_mb=args.memory_cap)


def _print_json(obj):
    print(json.dumps(obj, indent=1, sort_keys=True))


def cmd_parse(args) -> int:
    if args.problem is None:
        domain = parse_domain(Path(args.domain).read_text())
        _print_json({"domain": domain.name, "predicates": len(domain.predicates),
                     "schemata": [s.name for s in domain.schemata],
                     "static_predicates": sorted(detect_static_predicates(domain))})
        return EXIT_OK
    task = load_task(args.domain, args.problem)
    _print_json({"domain": task.domain.name, "problem": task.name, "objects": len(task.objects),
                 "init_atoms": len(task.init), "goal_atoms": len(task.goal),
                 "ground_actions": len(ground_actions(task))})
    return EXIT_OK


def cmd_graphify(args) -> int:
    task = load_task(args.domain, args.problem)
    statics = detect_static_predicates(task.domain)
    g = build_ilg(task, repr=args.repr, statics=statics)
    text = g.to_text()
    if args.output_dir:
        path = _output_dir(args) / f"{Path(args.problem).stem}.ilg"
        path.write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_oracle(args) -> int:
    task = load_task(args.domain, args.problem)
    res = uniform_cost_oracle(task, ground_actions(task), _budget(args))
    for a in res.plan:
        print(a)
    print(f"; optimal length {len(res.plan)}, labels {list(res.labels)}")
    return EXIT_OK


def _optimiser_params(pairs) -> dict:
    out = {}
    for item in pairs or ():
        if "=" not in item:
            raise ConfigError(f"expected name=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k] = float(v)
    return out


def cmd_train(args) -> int:
    config = ModelConfig(args.algorithm, args.iterations, args.pruning, args.hash, args.repr, args.optimiser)
    tasks = [load_task(args.domain, p) for p in args.problems]
    model = train(config, tasks, SearchBudget(args.timeout, max_memory_mb=args.memory_cap),
                  optimiser_params=_optimiser_params(args.param))
    path = Path(args.model) if args.model else _output_dir(args) / f"{config.key}.json"
    save_model(model, path)
    _print_json({"model": str(path), "config": config.key, "size": model.size,
                 "eval": model.metrics["eval"], "time_seconds": model.metrics["time_seconds"]})
    return EXIT_OK


def cmd_solve(args) -> int:
    task = load_task(args.domain, args.problem)
    ground = ground_actions(task)
    if args.blind:
        h = blind_heuristic
    else:
        if not args.model:
            raise ConfigError("solve needs --model or --blind")
        h = WLHeuristic(load_model(args.model), task)
    result = gbfs(task, ground, h, _budget(args))
    stats = {"solved": result.solved, **result.stats.to_dict()}
    if result.solved:
        stats["plan_length"] = len(result)
        sys.stdout.write(result.to_text())
    else:
        stats["reason"] = result.reason
        print(f"; no plan: {result.reason}", file=sys.stderr)
    if args.output_dir:
        out = _output_dir(args)
        stem = Path(args.problem).stem
        if result.solved:
            (out / f"{stem}.plan").write_text(result.to_text())
        (out / f"{stem}.stats.json").write_text(json.dumps(stats, indent=1, sort_keys=True) + "\n")
    if result.solved:
        return EXIT_OK
    return EXIT_NO_PLAN if result.reason == EXHAUSTED else EXIT_RESOURCE


def cmd_sweep(args) -> int:
    manifest = load_manifest(args.manifest)
    if args.timeout_given:
        manifest.budgets.plan_seconds = args.timeout
    if args.memory_cap_given:
        manifest.budgets.memory_mb = args.memory_cap
    grid = gridmod.Grid.from_filters(algorithms=args.algorithms, iterations=args.iterations,
                                     prunings=args.prunings, hashes=args.hashes, reprs=args.reprs,
                                     optimisers=args.optimisers)
    accepted, rejected = gridmod.validate(grid, enable_two_wl=args.enable_2wl)
    print(f"grid: {len(accepted)} accepted, {len(rejected)} rejected", file=sys.stderr)
    out = _output_dir(args)
    records = run_sweep(accepted, manifest, out, workers=args.workers)
    emit_report(records, out, args.format, timeout=manifest.budgets.plan_seconds)
    print(f"{len(records)} records in {out}", file=sys.stderr)
    return EXIT_OK


def cmd_stats(args) -> int:
    records = read_records(args.results)
    summary = summarise(records, args.timeout)
    _print_json({"configs": len(summary), "summary": summary, "correlations": correlations(summary),
                 "best_by_option": best_by_option(summary) if summary else {}})
    if args.output_dir:
        emit_report(records, _output_dir(args), args.format, timeout=args.timeout)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--timeout", type=float, default=None, help="search budget in seconds")
    common.add_argument("--memory-cap", type=float, default=4096.0, help="memory estimate cap in MB")
    common.add_argument("--seed-free", action="store_true", help="fail if any random generator is used")
    common.add_argument("--output-dir", default=None, help="directory for output files")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="wlf", description="Weisfeiler-Leman feature heuristics for planning")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("parse", parents=[common], help="parse and summarise a domain or problem")
    p.add_argument("domain")
    p.add_argument("problem", nargs="?")
    p.set_defaults(fn=cmd_parse)

    p = sub.add_parser("graphify", parents=[common], help="print the ILG of a problem's initial state")
    p.add_argument("domain")
    p.add_argument("problem")
    p.add_argument("--repr", default="complete", choices=["part", "partial", "cmpl", "complete"])
    p.set_defaults(fn=cmd_graphify)

    p = sub.add_parser("oracle", parents=[common], help="optimal plan and h* labels by uniform-cost search")
    p.add_argument("domain")
    p.add_argument("problem")
    p.set_defaults(fn=cmd_oracle)

    p = sub.add_parser("train", parents=[common], help="train a model on solvable problems")
    p.add_argument("domain")
    p.add_argument("problems", nargs="+")
    p.add_argument("--algorithm", default="wl")
    p.add_argument("--iterations", "-L", type=int, default=1)
    p.add_argument("--pruning", default="i-mf")
    p.add_argument("--hash", default="set")
    p.add_argument("--repr", default="part")
    p.add_argument("--optimiser", default="rksvm")
    p.add_argument("--param", action="append", help="optimiser parameter as name=value, e.g. C=1")
    p.add_argument("--model", "-o", help="model output path")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("solve", parents=[common], help="greedy best-first search with a model")
    p.add_argument("domain")
    p.add_argument("problem")
    p.add_argument("--model", "-m")
    p.add_argument("--blind", action="store_true", help="use h = 0 instead of a model")
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("sweep", parents=[common], help="run a hyperparameter sweep over a manifest")
    p.add_argument("manifest")
    p.add_argument("--algorithms", nargs="+")
    p.add_argument("--iterations", nargs="+", type=int)
    p.add_argument("--prunings", nargs="+")
    p.add_argument("--hashes", nargs="+")
    p.add_argument("--reprs", nargs="+")
    p.add_argument("--optimisers", nargs="+")
    p.add_argument("--enable-2wl", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--format", default="csv", choices=["csv", "json"])
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("stats", parents=[common], help="summaries and correlations from results.jsonl")
    p.add_argument("results")
    p.add_argument("--format", default="csv", choices=["csv", "json"])
    p.set_defaults(fn=cmd_stats)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    args.timeout_given = args.timeout is not None
    args.memory_cap_given = "--memory-cap" in (argv if argv is not None else sys.argv)
    if args.timeout is None:
        args.timeout = DEFAULT_TIMEOUT
    guard = forbid_rng() if args.seed_free else contextlib.nullcontext()
    try:
        with guard:
            return args.fn(args)
    except (GroundingLimitError, PairMemoryError, MemoryError, OracleError) as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (PDDLError, ConfigError, ManifestError, ModelFileError, RNGUsed, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
