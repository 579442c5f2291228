"""Train the reference configuration and solve the held-out split; used by the determinism check.

Usage: python pipeline_run.py OUTPUT_DIR
"""

import json
import sys
from pathlib import Path

from wlfeatures.learn import save_model
from wlfeatures.pddl import ground_actions, parse_domain, parse_problem
from wlfeatures.pipeline import ModelConfig, WLHeuristic, train
from wlfeatures.search import SearchBudget, gbfs

BW = Path(__file__).resolve().parents[1] / "src" / "wlfeatures" / "data" / "blocksworld"
CONFIG = ModelConfig("wl", 1, "i-mf", "set", "part", "rksvm")


def main(out):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = json.loads((BW / "manifest.json").read_text())
    domain = parse_domain((BW / manifest["domain"]).read_text())
    train_tasks = [parse_problem((BW / p).read_text(), domain) for p in manifest["train"]]
    model = train(CONFIG, train_tasks)
    save_model(model, out / "model.json")
    flags = {}
    for p in manifest["test"]:
        task = parse_problem((BW / p).read_text(), domain)
        result = gbfs(task, ground_actions(task), WLHeuristic(model, task),
                      SearchBudget(manifest["budgets"]["plan_seconds"]))
        flags[p] = [result.solved, len(result) if result.solved else None]
    (out / "flags.json").write_text(json.dumps(flags, sort_keys=True))


if __name__ == "__main__":
    main(sys.argv[1])
