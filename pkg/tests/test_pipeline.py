import numpy as np
import pytest

from wlfeatures.learn import dumps_model
from wlfeatures.pipeline import ConfigError, ModelConfig, WLHeuristic, model_config, train
from wlfeatures.search import gbfs, validate_plan

from conftest import bw_tasks


def test_config_normalises_aliases():
    c = ModelConfig("WL", 2, "i-mf", "multiset", "cmpl", "rkSVM")
    assert (c.algorithm, c.hash_mode, c.repr, c.optimiser) == ("wl", "mset", "complete", "rksvm")
    assert c.key == "wl_L2_i-mf_mset_cmpl_rksvm"


@pytest.mark.parametrize("algo", ["iwl", "niwl"])
def test_config_rejects_pruned_individualised(algo):
    with pytest.raises(ConfigError, match="not supported"):
        ModelConfig(algo, 1, "i-mf")


@pytest.mark.parametrize("optimiser", ["lasso", "gpr", "svr", "rksvm", "rklp"])
def test_train_every_optimiser(optimiser):
    tasks = bw_tasks("train")[:3]
    model = train(ModelConfig("wl", 1, "none", "mset", "part", optimiser), tasks)
    assert model.size == len(model.index) > 0
    assert model_config(model).optimiser == optimiser
    h = WLHeuristic(model, tasks[0])
    assert np.isfinite(h(tasks[0].init))


@pytest.mark.parametrize("algo", ["iwl", "niwl", "2-lwl", "2-wl"])
def test_train_other_algorithms(algo):
    tasks = bw_tasks("train")[:2]
    model = train(ModelConfig(algo, 1, "none", "set", "part", "gpr"), tasks)
    task = bw_tasks("test")[0]
    result = gbfs(task, None, WLHeuristic(model, task))
    assert not result.solved or validate_plan(task, result.actions)


def test_pruning_never_grows_the_model():
    tasks = bw_tasks("train")
    full = train(ModelConfig("wl", 2, "none", "mset", "part", "rksvm"), tasks)
    pruned = train(ModelConfig("wl", 2, "i-mf", "mset", "part", "rksvm"), tasks)
    assert pruned.size <= full.size
    assert pruned.metrics["pruning"]["kept"] == pruned.size


def test_training_is_reproducible():
    tasks = bw_tasks("train")
    cfg = ModelConfig("wl", 1, "i-mf", "set", "part", "rksvm")
    assert dumps_model(train(cfg, tasks)) == dumps_model(train(cfg, tasks))
