import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wlfeatures.kernels import Embedding, FeatureIndex
from wlfeatures.learn import (ConvergenceWarning, LinearModel, ModelFileError, RankingSet, RegressionSet, fit,
                              fit_gpr, fit_lasso, fit_rank_lp, fit_rank_svm, fit_svr, lasso_objective, load_model,
                              predict, rank_lp_objective, save_model)


def linear_data(seed=0, n=200, d=20):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 5, (n, d)).astype(float)
    w = rng.normal(size=d)
    return X, w, X @ w


def chain(n=100, noise=5, seed=0):
    """States 0..n-1 along a trace; state i+1 is one step closer to the goal."""
    rng = np.random.default_rng(seed)
    X = np.column_stack([np.arange(n)[::-1], rng.integers(0, 3, (n, noise))]).astype(float)
    pairs = [(i + 1, i) for i in range(n - 1)]
    return RankingSet(X, pairs)


def mse(model, X, y):
    return float(np.mean((model.predict_many(X) - y) ** 2))


class TestLasso:
    def test_recovers_exact_linear_targets(self):
        X, _, y = linear_data()
        m = fit_lasso(RegressionSet(X, y), alpha=1e-6)
        assert m.converged and mse(m, X, y) < 1e-6

    def test_zero_matrix(self):
        y = np.array([1.0, 2.0, 6.0])
        m = fit_lasso(RegressionSet(np.zeros((3, 4)), y))
        assert np.all(m.weights == 0) and m.bias == pytest.approx(3.0)

    def test_large_alpha_gives_zero_weights(self):
        X, _, y = linear_data(1)
        Xc = X - X.mean(axis=0)
        bound = np.abs(Xc.T @ (y - y.mean())).max() / len(y)
        m = fit_lasso(RegressionSet(X, y), alpha=bound * 1.0001)
        assert np.all(m.weights == 0.0)
        m = fit_lasso(RegressionSet(X, y), alpha=bound * 0.9)
        assert np.any(m.weights != 0.0)

    def test_objective_below_start(self):
        X, _, y = linear_data(2)
        y = y + np.random.default_rng(2).normal(size=len(y))
        m = fit_lasso(RegressionSet(X, y), alpha=0.1)
        start = lasso_objective(X, y, np.zeros(X.shape[1]), y.mean(), 0.1)
        assert m.metrics["eval"] < start

    def test_non_convergence_warns(self):
        X, _, y = linear_data(3)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            m = fit_lasso(RegressionSet(X, y), alpha=1e-8, max_sweeps=2)
        assert not m.converged
        assert any(issubclass(w.category, ConvergenceWarning) for w in caught)

    def test_rejects_bad_alpha(self):
        with pytest.raises(ValueError):
            fit_lasso(RegressionSet(np.ones((2, 1)), [1, 2]), alpha=0)


class TestGPR:
    def test_recovers_weights(self):
        X, w, y = linear_data(4)
        m = fit_gpr(RegressionSet(X, y), noise=1e-8)
        assert np.allclose(m.weights, w, atol=1e-6) and mse(m, X, y) < 1e-6

    def test_constant_targets(self):
        X, _, _ = linear_data(5)
        m = fit_gpr(RegressionSet(X, np.full(len(X), 4.0)))
        assert np.allclose(m.weights, 0, atol=1e-12) and m.bias == pytest.approx(4.0)

    def test_noise_shrinks_weights(self):
        X, _, y = linear_data(6)
        norms = [np.linalg.norm(fit_gpr(RegressionSet(X, y), noise=s).weights) for s in (0.1, 1.0, 10.0, 100.0)]
        assert all(a > b for a, b in zip(norms, norms[1:]))

    def test_normal_equations(self):
        X, _, y = linear_data(7)
        y = y + np.random.default_rng(7).normal(size=len(y))
        m = fit_gpr(RegressionSet(X, y), noise=0.5)
        Xc, yc = X - X.mean(axis=0), y - y.mean()
        resid = (Xc.T @ Xc + 0.5 * np.eye(X.shape[1])) @ m.weights - Xc.T @ yc
        assert np.abs(resid).max() < 1e-8 * max(1.0, np.abs(Xc.T @ yc).max())


class TestSVR:
    def test_residuals_inside_tube(self):
        X, _, y = linear_data(8, n=60, d=6)
        m = fit_svr(RegressionSet(X, y), epsilon=0.1)
        assert np.abs(m.predict_many(X) - y).max() <= 0.1 + 0.05

    def test_zero_penalty(self):
        X, _, y = linear_data(9)
        m = fit_svr(RegressionSet(X, y), C=0.0)
        assert np.all(m.weights == 0)

    @pytest.mark.parametrize("solver", ["dcd", "subgradient"])
    def test_best_so_far_history_is_monotone(self, solver):
        X, _, y = linear_data(10, n=50, d=5)
        m = fit_svr(RegressionSet(X, y), solver=solver, epochs=200)
        h = m.metrics["history"]
        assert all(a >= b for a, b in zip(h, h[1:]))
        assert h[-1] == m.metrics["eval"]


class TestRankSVM:
    def test_single_pair_margin(self):
        data = RankingSet([[1.0, 0.0], [0.0, 2.0]], [(0, 1)])
        m = fit_rank_svm(data)
        assert data.differences() @ m.weights >= 0.9

    def test_empty_pairs(self):
        m = fit_rank_svm(RankingSet(np.ones((3, 2)), np.zeros((0, 2))))
        assert np.all(m.weights == 0) and m.bias == 0

    def test_identical_pair_has_no_effect(self):
        base = chain(20)
        X = np.vstack([base.X, base.X[:1]])
        with_dup = RankingSet(X, [*map(tuple, base.pairs), (0, len(X) - 1)])
        a, b = fit_rank_svm(base), fit_rank_svm(with_dup)
        assert np.allclose(a.weights, b.weights)
        assert b.metrics["eval"] == pytest.approx(a.metrics["eval"] + 1.0)

    def test_chain_order(self):
        data = chain()
        m = fit_rank_svm(data)
        assert (data.differences() @ m.weights >= 0.5).all()
        assert list(np.argsort(-m.predict_many(data.X), kind="stable")) == list(range(100))


class TestRankLP:
    def test_rankable_chain_slack(self):
        data = chain()
        m = fit_rank_lp(data, l1=1e-3)
        assert m.metrics["slack"] < 0.01 * len(data.pairs)

    def test_contradictory_pairs(self):
        data = RankingSet([[1.0], [3.0]], [(0, 1), (1, 0)])
        m = fit_rank_lp(data)
        scan = min(rank_lp_objective(data.differences(), np.array([w]), 1e-3) for w in np.linspace(-5, 5, 10001))
        assert np.isfinite(m.weights).all()
        assert m.metrics["eval"] >= 1.0
        assert m.metrics["eval"] == pytest.approx(scan, abs=1e-2)

    def test_huge_l1(self):
        data = chain(10)
        m = fit_rank_lp(data, l1=1e12)
        assert np.all(m.weights == 0) and m.metrics["slack"] == len(data.pairs)


def test_fits_are_deterministic():
    X, _, y = linear_data(11, n=40, d=5)
    for name in ("lasso", "gpr", "svr"):
        a, b = fit(name, RegressionSet(X, y)), fit(name, RegressionSet(X, y))
        assert np.array_equal(a.weights, b.weights) and a.bias == b.bias
    for name in ("rksvm", "rklp"):
        a, b = fit(name, chain(30)), fit(name, chain(30))
        assert np.array_equal(a.weights, b.weights)


def test_fit_rejects_unknown_optimiser():
    with pytest.raises(ValueError):
        fit("rkgpc", chain(5))


class TestPredict:
    def test_zero_weights_give_bias(self):
        m = LinearModel(np.zeros(3), 2.5, "gpr")
        assert predict(m, [1, 2, 3]) == 2.5

    def test_one_hot(self):
        m = LinearModel(np.array([1.0, -2.0, 3.0]), 0.5, "gpr")
        assert predict(m, [0, 1, 0]) == pytest.approx(-1.5)

    def test_embedding_input(self):
        m = LinearModel(np.array([1.0, 1.0]), 0.0, "gpr")
        assert predict(m, Embedding(np.array([1, 3]), 2)) == pytest.approx(2.0)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            predict(LinearModel(np.zeros(3), 0.0, "gpr"), [1, 2])

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-10, 10), min_size=4, max_size=4), st.fractions(-5, 5),
           st.lists(st.integers(0, 9), min_size=4, max_size=4), st.lists(st.integers(0, 9), min_size=4, max_size=4))
    def test_linearity(self, w, a, x, y):
        m = LinearModel(np.array(w), 1.25, "gpr")
        x, y = np.array(x, float), np.array(y, float)
        a = float(a)
        lhs = predict(m, a * x + y)
        rhs = a * (predict(m, x) - m.bias) + (predict(m, y) - m.bias) + m.bias
        assert lhs == pytest.approx(rhs, abs=1e-9)

    def test_nonfinite_weights_rejected(self):
        with pytest.raises(ValueError):
            LinearModel(np.array([np.nan]), 0.0, "gpr")


class TestPersistence:
    def model(self):
        X, _, y = linear_data(12, n=30, d=4)
        m = fit("gpr", RegressionSet(X, y))
        m.index = FeatureIndex((3, 5, 7, 9))
        return m, X

    def test_round_trip_bit_exact(self, tmp_path):
        m, X = self.model()
        save_model(m, tmp_path / "m.json")
        back = load_model(tmp_path / "m.json")
        assert back.weights.tobytes() == m.weights.tobytes() and back.bias == m.bias
        assert back.index == m.index
        assert np.array_equal(back.predict_many(X), m.predict_many(X))
        assert back.metrics["eval"] == m.metrics["eval"] and back.metrics["size"] == 4

    def test_files_are_reproducible(self, tmp_path):
        m, _ = self.model()
        save_model(m, tmp_path / "a.json")
        m.metrics["time_seconds"] = 123.0
        save_model(m, tmp_path / "b.json")
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_wrong_version(self, tmp_path):
        m, _ = self.model()
        save_model(m, tmp_path / "m.json")
        data = json.loads((tmp_path / "m.json").read_text())
        data["version"] = 99
        (tmp_path / "m.json").write_text(json.dumps(data))
        with pytest.raises(ModelFileError, match="version"):
            load_model(tmp_path / "m.json")

    def test_corrupt_file(self, tmp_path):
        (tmp_path / "m.json").write_text("{not json")
        with pytest.raises(ModelFileError):
            load_model(tmp_path / "m.json")
        (tmp_path / "m.json").write_text(json.dumps({"format": "wlfeatures-model", "version": 1}))
        with pytest.raises(ModelFileError):
            load_model(tmp_path / "m.json")
