import json
import subprocess
import sys

import pytest

from wlfeatures.cli import EXIT_NO_PLAN, EXIT_OK, EXIT_RESOURCE, EXIT_VALIDATION, forbid_rng, main

from conftest import BW, DATA

DOM = str(BW / "domain.pddl")
FIG1 = str(BW / "three-blocks.pddl")


def test_parse(capsys):
    assert main(["parse", DOM, FIG1]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["ground_actions"] == 24 and out["objects"] == 3


def test_parse_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.pddl"
    bad.write_text("(define (domain d) (:requirements :adl))")
    assert main(["parse", str(bad)]) == EXIT_VALIDATION


def test_graphify(tmp_path, capsys):
    assert main(["graphify", DOM, FIG1, "--output-dir", str(tmp_path)]) == EXIT_OK
    text = (tmp_path / "three-blocks.ilg").read_text()
    assert text.count("\nn ") + text.startswith("n ") == 11


def test_oracle(capsys):
    assert main(["oracle", DOM, FIG1]) == EXIT_OK
    assert "optimal length 4" in capsys.readouterr().out


def test_train_and_solve(tmp_path, capsys):
    model = tmp_path / "m.json"
    train = [str(p) for p in sorted((BW / "train").glob("*.pddl"))]
    assert main(["train", DOM, *train, "--model", str(model), "--seed-free"]) == EXIT_OK
    capsys.readouterr()
    test = str(sorted((BW / "test").glob("*.pddl"))[0])
    assert main(["solve", DOM, test, "-m", str(model), "--timeout", "5", "--output-dir", str(tmp_path)]) == EXIT_OK
    plan = capsys.readouterr().out
    assert plan.startswith("(") and (tmp_path / (sorted((BW / "test").glob("*.pddl"))[0].stem + ".plan")).exists()


def test_bad_config_exit_code(tmp_path, capsys):
    train = str(sorted((BW / "train").glob("*.pddl"))[0])
    assert main(["train", DOM, train, "--algorithm", "iwl", "--pruning", "i-mf",
                 "--model", str(tmp_path / "m.json")]) == EXIT_VALIDATION


def test_solve_outcomes(capsys):
    corridor = DATA / "corridor"
    assert main(["solve", str(corridor / "domain.pddl"), str(corridor / "unsolvable.pddl"), "--blind"]) == EXIT_NO_PLAN
    hard = str(BW / "test" / "test-09-n8.pddl")
    assert main(["solve", DOM, hard, "--blind", "--timeout", "0.2"]) == EXIT_RESOURCE


def test_oracle_resource_error(capsys):
    hard = str(BW / "test" / "test-09-n8.pddl")
    assert main(["oracle", DOM, hard, "--timeout", "0.1"]) == EXIT_RESOURCE


def test_sweep_and_stats(tmp_path, capsys):
    manifest = tmp_path / "manifest.json"
    manifest.write_text(json.dumps({
        "domain": DOM, "train": [str(p) for p in sorted((BW / "train").glob("*.pddl"))[:2]],
        "test": [str(p) for p in sorted((BW / "test").glob("*.pddl"))[:1]], "budgets": {"plan_seconds": 5}}))
    out = tmp_path / "out"
    args = ["sweep", str(manifest), "--algorithms", "wl", "iwl", "--iterations", "1", "--prunings", "none", "i-mf",
            "--hashes", "set", "--reprs", "part", "--optimisers", "gpr", "--output-dir", str(out)]
    assert main(args) == EXIT_OK
    assert "3 accepted, 1 rejected" in capsys.readouterr().err
    assert len((out / "results.jsonl").read_text().splitlines()) == 3
    assert (out / "summary.csv").exists()
    assert main(["stats", str(out / "results.jsonl")]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["configs"] == 3


def test_forbid_rng():
    import random

    import numpy as np

    with forbid_rng():
        with pytest.raises(AssertionError):
            random.random()
        with pytest.raises(AssertionError):
            np.random.default_rng(0)
    random.random()


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "wlfeatures.cli", "parse", DOM], capture_output=True, text=True)
    assert proc.returncode == 0 and '"domain": "blocksworld"' in proc.stdout
