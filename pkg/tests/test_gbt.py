import numpy as np
import pytest

from promokit import gbt
from promokit.gbt import (
    EmptyDataset,
    FeatureMismatch,
    HyperParams,
    InvalidHyperParams,
    NonFiniteInput,
    NoSplits,
)


def hp(**kw):
    base = dict(nrounds=1, base_score=0.0, eta=1.0, gamma=0.0, max_depth=6, subsample=1.0)
    base.update(kw)
    return HyperParams(**base)


def train_rmse(model, X, y, n_trees=None):
    pred = gbt.predict(model, X, n_trees=n_trees)
    return float(np.sqrt(np.mean((pred - y) ** 2)))


def best_split_oracle(X, g, lam=1.0, gamma=0.0, min_child_weight=1.0):
    """Independent exhaustive scan over all midpoint thresholds; ties keep
    the lowest feature index then the lowest threshold."""
    n, m = X.shape
    G, H = float(g.sum()), float(n)
    parent = G * G / (H + lam)
    best = (0.0, -1, 0.0)
    for f in range(m):
        order = np.argsort(X[:, f], kind="stable")
        xs, gs = X[order, f], g[order]
        gl = hl = 0.0
        for i in range(n - 1):
            gl += gs[i]
            hl += 1.0
            if xs[i] == xs[i + 1]:
                continue
            if hl < min_child_weight or H - hl < min_child_weight:
                continue
            gr, hr = G - gl, H - hl
            gain = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent) - gamma
            if gain > 0.0 and gain > best[0]:
                best = (gain, f, 0.5 * (xs[i] + xs[i + 1]))
    return best


HAND_X = np.array([[0.0], [0.0], [1.0], [1.0]])
HAND_Y = np.array([0.0, 0.0, 10.0, 10.0])


class TestHandFixture:
    def test_root_gain_and_leaf_weights(self):
        model = gbt.train(HAND_X, HAND_Y, ["x"], hp(base_score=5.0, max_depth=1), seed=0)
        assert len(model.trees) == 1
        tree = model.trees[0]
        assert tree.feature[0] == 0
        assert tree.threshold[0] == 0.5
        assert abs(tree.gain[0] - 100 / 3) <= 1e-9
        assert abs(tree.weight[tree.left[0]] - (-10 / 3)) <= 1e-9
        assert abs(tree.weight[tree.right[0]] - 10 / 3) <= 1e-9
        pred = gbt.predict(model, HAND_X)
        assert pred[0] == pytest.approx(5 / 3)
        assert pred[2] == pytest.approx(25 / 3)

    def test_eta_scales_leaf_weights(self):
        m1 = gbt.train(HAND_X, HAND_Y, ["x"], hp(base_score=5.0, max_depth=1), seed=0)
        m2 = gbt.train(HAND_X, HAND_Y, ["x"], hp(base_score=5.0, max_depth=1, eta=0.3), seed=0)
        assert m2.trees[0].weight[1] == pytest.approx(0.3 * m1.trees[0].weight[1])


class TestGainOracle:
    @pytest.mark.parametrize("seed", range(8))
    def test_root_split_matches_exhaustive_scan(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(5, 51))
        m = int(rng.integers(1, 6))
        X = np.round(rng.normal(size=(n, m)), 2)
        y = rng.normal(size=n)
        gamma = float(rng.choice([0.0, 0.1, 1.0]))
        params = hp(base_score=float(y.mean()), max_depth=1, gamma=gamma)
        model = gbt.train(X, y, [f"f{i}" for i in range(m)], params, seed=0)
        g = np.full(n, params.base_score) - y
        gain, feat, thr = best_split_oracle(X, g, gamma=gamma)
        if feat < 0:
            assert model.trees == []
            return
        tree = model.trees[0]
        assert tree.feature[0] == feat
        assert abs(tree.threshold[0] - thr) <= 1e-9
        assert abs(tree.gain[0] - gain) <= 1e-9


class TestTrainingBehavior:
    def test_rmse_non_increasing_over_rounds(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(120, 5))
        y = X[:, 0] * 2 + np.sin(X[:, 1]) + 0.1 * rng.normal(size=120)
        model = gbt.train(X, y, [f"f{i}" for i in range(5)],
                          hp(nrounds=60, eta=0.3, base_score=float(y.mean())), seed=0)
        rmses = [train_rmse(model, X, y, n_trees=k) for k in range(len(model.trees) + 1)]
        assert all(b <= a + 1e-12 for a, b in zip(rmses, rmses[1:]))

    def test_deterministic_for_fixed_seed(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(80, 4))
        y = rng.normal(size=80)
        params = hp(nrounds=10, eta=0.5, subsample=0.5, base_score=0.0)
        names = [f"f{i}" for i in range(4)]
        a = gbt.predict(gbt.train(X, y, names, params, seed=42), X)
        b = gbt.predict(gbt.train(X, y, names, params, seed=42), X)
        c = gbt.predict(gbt.train(X, y, names, params, seed=43), X)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_max_depth_one_grows_stumps(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(60, 3))
        y = rng.normal(size=60)
        model = gbt.train(X, y, ["a", "b", "c"],
                          hp(nrounds=20, eta=0.3, max_depth=1, base_score=0.0), seed=0)
        assert model.trees
        assert all(t.n_splits == 1 for t in model.trees)

    def test_gamma_prunes_single_tree_monotonically(self):
        rng = np.random.default_rng(6)
        X = rng.normal(size=(100, 4))
        y = rng.normal(size=100)
        names = ["a", "b", "c", "d"]
        sizes = []
        for gamma in (0.0, 0.5, 1.0, 2.0, 5.0):
            model = gbt.train(X, y, names, hp(gamma=gamma, base_score=0.0), seed=0)
            sizes.append(model.trees[0].n_splits if model.trees else 0)
        assert all(b <= a for a, b in zip(sizes, sizes[1:]))

    def test_constant_target_stops_immediately(self):
        X = np.arange(20.0).reshape(-1, 1)
        y = np.full(20, 7.0)
        model = gbt.train(X, y, ["x"], hp(nrounds=50, base_score=7.0), seed=0)
        assert model.trees == []

    def test_nrounds_prefix_nesting(self):
        """Training with fewer rounds equals truncating a longer ensemble."""
        rng = np.random.default_rng(7)
        X = rng.normal(size=(90, 4))
        y = rng.normal(size=90)
        names = [f"f{i}" for i in range(4)]
        params = hp(nrounds=30, eta=0.4, subsample=0.7, base_score=0.0)
        long = gbt.train(X, y, names, params, seed=9)
        for k in (1, 7, 15):
            short = gbt.train(X, y, names, params.replace(nrounds=k), seed=9)
            assert np.array_equal(
                gbt.predict(short, X), gbt.predict(long, X, n_trees=k)
            )

    def test_subsample_floor_minimum_one(self):
        X = np.arange(10.0).reshape(-1, 1)
        y = np.arange(10.0)
        model = gbt.train(X, y, ["x"], hp(nrounds=3, subsample=0.0001, base_score=0.0), seed=1)
        assert isinstance(model, gbt.GbtModel)  # one-row samples are legal


class TestValidation:
    def test_empty_dataset(self):
        with pytest.raises(EmptyDataset):
            gbt.train(np.empty((0, 1)), np.empty(0), ["x"], hp(), seed=0)

    def test_non_finite_input(self):
        with pytest.raises(NonFiniteInput):
            gbt.train(np.array([[np.nan]]), np.array([1.0]), ["x"], hp(), seed=0)

    def test_feature_name_count_mismatch(self):
        with pytest.raises(FeatureMismatch):
            gbt.train(np.ones((2, 2)), np.ones(2), ["x"], hp(), seed=0)

    @pytest.mark.parametrize("kw", [
        dict(nrounds=-1), dict(eta=1.5), dict(gamma=-0.1),
        dict(max_depth=0), dict(subsample=0.0), dict(subsample=1.2),
        dict(base_score=float("inf")),
    ])
    def test_invalid_hyperparams(self, kw):
        with pytest.raises(InvalidHyperParams):
            hp(**kw)

    def test_predict_row_feature_mismatch(self):
        model = gbt.train(HAND_X, HAND_Y, ["x"], hp(base_score=5.0), seed=0)
        with pytest.raises(FeatureMismatch):
            gbt.predict_row(model, {"y": 1.0})


class TestImportance:
    def _model(self):
        rng = np.random.default_rng(8)
        X = rng.normal(size=(150, 5))
        y = 3 * X[:, 2] + 0.5 * X[:, 0] + 0.05 * rng.normal(size=150)
        return gbt.train(X, y, [f"f{i}" for i in range(5)],
                         hp(nrounds=20, eta=0.3, base_score=float(y.mean())), seed=0)

    def test_leading_value_is_one_and_sorted(self):
        ranked = gbt.importance(self._model())
        assert ranked[0] == ("f2", 1.0)
        values = [v for _, v in ranked]
        assert values == sorted(values, reverse=True)
        assert all(0 < v <= 1.0 for v in values)

    def test_top_k_truncates(self):
        assert len(gbt.importance(self._model(), top_k=1)) == 1

    def test_no_splits_raises(self):
        X = np.arange(20.0).reshape(-1, 1)
        model = gbt.train(X, np.full(20, 7.0), ["x"], hp(base_score=7.0), seed=0)
        with pytest.raises(NoSplits):
            gbt.importance(model)


class TestSerialization:
    def _model(self):
        rng = np.random.default_rng(9)
        X = rng.normal(size=(70, 3))
        y = rng.normal(size=70)
        model = gbt.train(X, y, ["a", "b", "c"],
                          hp(nrounds=8, eta=0.4, subsample=0.8, base_score=0.25), seed=5)
        model.metadata = {"group": "dairy", "indicator": "avg_basket"}
        return model, X

    def test_round_trip_is_exact(self):
        model, X = self._model()
        text = gbt.dump_model(model)
        clone = gbt.loads_model(text)
        assert gbt.dump_model(clone) == text
        assert clone.hyperparams == model.hyperparams
        assert clone.feature_names == model.feature_names
        assert clone.metadata == model.metadata
        assert np.array_equal(gbt.predict(clone, X), gbt.predict(model, X))

    def test_file_round_trip(self, tmp_path):
        model, X = self._model()
        path = tmp_path / "m.model"
        gbt.save_model(path, model)
        clone = gbt.load_model(path)
        assert np.array_equal(gbt.predict(clone, X), gbt.predict(model, X))

    def test_bad_header_rejected(self):
        with pytest.raises(gbt.GbtError):
            gbt.loads_model("something-else 1\n")
