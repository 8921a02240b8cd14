import math

import numpy as np
import pytest

from nbm_detect.errors import ModelError, TrainingError
from nbm_detect.mlp import (HiddenLayer, MlpArchitecture, RegressionDataset, TrainConfig, evaluate_error, forward,
                            gradient_check, init_model, kink_distance, load_model, loss_and_gradient,
                            model_from_bytes, model_to_bytes, predict_series, preset_architecture, save_model,
                            train)

LINEAR = MlpArchitecture(hidden_layers=(), output_dim=2, input_dim=3, dropout_rate=0.0)


def linear_model(W, b):
    return init_model(LINEAR).replace(params=np.concatenate([np.ravel(W), b]))


def smooth_inputs(model, rng, n=1, margin=1e-3):
    """Random inputs whose rectified units all sit at least ``margin`` from the kink."""
    while True:
        x = rng.uniform(0, 1, (n, 3))
        if kink_distance(model, x) > margin:
            return x


class TestArchitecture:
    def test_multi_target_preset(self):
        a = preset_architecture("multi_target")
        assert a.widths == (4, 19)
        assert a.output_dim == 3 and a.dropout_rate == 0.1 and a.input_dim == 3

    def test_single_target_preset(self):
        a = preset_architecture("single_target")
        assert a.widths == (4, 4, 5)
        assert a.output_dim == 1 and a.dropout_rate == 0.1 and a.input_dim == 3

    def test_batch_norm_on_every_hidden_layer(self):
        for kind in ("multi_target", "single_target"):
            assert all(h.batch_norm for h in preset_architecture(kind).hidden_layers)

    def test_unknown_kind(self):
        with pytest.raises(ModelError):
            preset_architecture("triple")

    @pytest.mark.parametrize("kwargs", [dict(hidden_layers=((0, True),), output_dim=1),
                                        dict(hidden_layers=(), output_dim=1, dropout_rate=1.0),
                                        dict(hidden_layers=(), output_dim=0)])
    def test_invalid(self, kwargs):
        with pytest.raises(ModelError):
            MlpArchitecture(**kwargs)

    def test_dict_round_trip(self):
        a = preset_architecture("single_target")
        assert MlpArchitecture.from_dict(a.to_dict()) == a


class TestInit:
    def test_deterministic(self):
        a = preset_architecture("multi_target")
        assert init_model(a, 5).equals(init_model(a, 5))
        assert not init_model(a, 5).equals(init_model(a, 6))

    def test_biases_zero_and_bn_identity(self):
        m = init_model(preset_architecture("single_target"), 1)
        for lay in m.layers():
            assert not lay["bias"].any()
            if "gamma" in lay:
                assert np.all(lay["gamma"] == 1) and not lay["beta"].any()
        for rv in m.running_views():
            if rv is not None:
                assert not rv["running_mean"].any() and np.all(rv["running_var"] == 1)

    def test_first_layer_bound(self):
        m = init_model(preset_architecture("multi_target"), 2)
        w = m.layers()[0]["weight"]
        assert w.shape == (4, 3)
        assert np.abs(w).max() <= math.sqrt(6 / 7)

    def test_shapes(self):
        m = init_model(preset_architecture("multi_target"))
        assert [lay["weight"].shape for lay in m.layers()] == [(4, 3), (19, 4), (3, 19)]


class TestForward:
    def test_zero_network(self):
        m = init_model(preset_architecture("multi_target"))
        zero = m.replace(params=np.zeros_like(m.params))
        assert np.array_equal(forward(zero, [0.3, 0.2, 0.9]), np.zeros(3))

    def test_inference_repeatable(self):
        m = init_model(preset_architecture("single_target"), 4)
        x = [0.1, 0.5, 0.7]
        assert np.array_equal(forward(m, x), forward(m, x))

    def test_affine_by_hand(self):
        W = np.array([[1.0, 2.0, 3.0], [-1.0, 0.5, 0.0]])
        b = np.array([0.5, -0.25])
        out = forward(linear_model(W, b), [1.0, 2.0, 3.0])
        assert out.tolist() == [14.5, -0.25]

    def test_output_dims(self):
        x = np.random.default_rng(0).uniform(size=(7, 3))
        assert forward(init_model(preset_architecture("multi_target")), x).shape == (7, 3)
        assert forward(init_model(preset_architecture("single_target")), x).shape == (7, 1)

    def test_shape_mismatch(self):
        with pytest.raises(ModelError):
            forward(init_model(preset_architecture("multi_target")), [1.0, 2.0])

    def test_dropout_only_in_train_mode(self):
        m = init_model(preset_architecture("multi_target"), 0)
        x = np.random.default_rng(1).uniform(size=(32, 3))
        a = forward(m, x, "train", np.random.default_rng(0))
        b = forward(m, x, "train", np.random.default_rng(1))
        assert not np.array_equal(a, b)
        assert np.array_equal(forward(m, x, "train"), forward(m, x, "train"))


class TestPredict:
    def test_empty(self):
        m = init_model(preset_architecture("multi_target"))
        assert predict_series(m, np.zeros((0, 3))).shape == (0, 3)

    def test_matches_forward(self):
        m = init_model(preset_architecture("single_target"), 8)
        x = np.array([0.2, 0.4, 0.6])
        assert np.array_equal(predict_series(m, x[None, :])[0], forward(m, x))

    def test_identical_rows(self):
        m = init_model(preset_architecture("multi_target"), 8)
        out = predict_series(m, np.tile([0.3, 0.3, 0.3], (5, 1)))
        assert np.all(out == out[0])

    def test_does_not_mutate(self):
        m = init_model(preset_architecture("multi_target"), 8)
        before = m.params.copy()
        predict_series(m, np.ones((3, 3)))
        assert np.array_equal(before, m.params)


class TestEvaluateError:
    def test_exact(self):
        W, b = np.array([[1.0, 0, 0], [0, 1.0, 0]]), np.zeros(2)
        x = np.random.default_rng(0).uniform(size=(10, 3))
        rep = evaluate_error(linear_model(W, b), RegressionDataset(x, x[:, :2]))
        assert np.array_equal(rep.rmse, [0, 0])

    def test_constant_offset(self):
        W, b = np.array([[1.0, 0, 0], [0, 1.0, 0]]), np.array([0.1, 0.1])
        x = np.random.default_rng(0).uniform(size=(10, 3))
        rep = evaluate_error(linear_model(W, b), RegressionDataset(x, x[:, :2]))
        np.testing.assert_allclose(rep.rmse, [0.1, 0.1], rtol=1e-12)
        np.testing.assert_allclose(rep.mae, [0.1, 0.1], rtol=1e-12)

    def test_two_point(self):
        m = linear_model(np.zeros((2, 3)), np.array([0.5, 0.5]))
        rep = evaluate_error(m, RegressionDataset(np.zeros((2, 3)), [[0.0, 0.0], [1.0, 1.0]]))
        assert rep.rmse.tolist() == [0.5, 0.5]

    def test_empty(self):
        with pytest.raises(ModelError):
            evaluate_error(linear_model(np.zeros((2, 3)), np.zeros(2)),
                           RegressionDataset(np.zeros((0, 3)), np.zeros((0, 2))))


class TestGradients:
    @pytest.mark.parametrize("kind", ["multi_target", "single_target"])
    def test_fresh_preset(self, kind):
        rng = np.random.default_rng(0)
        for seed in range(5):
            m = init_model(preset_architecture(kind), seed)
            x = smooth_inputs(m, rng)
            y = rng.uniform(0, 1, (1, m.architecture.output_dim))
            assert gradient_check(m, x, y, 1e-5) < 1e-4

    def test_zero_network(self):
        m = init_model(preset_architecture("multi_target"))
        zero = m.replace(params=np.zeros_like(m.params))
        assert gradient_check(zero, [0.2, 0.4, 0.6], [0.0, 0.0, 0.0]) == 0.0

    def test_linear_closed_form(self):
        rng = np.random.default_rng(3)
        W, b = rng.normal(size=(2, 3)), rng.normal(size=2)
        x, y = rng.normal(size=(4, 3)), rng.normal(size=(4, 2))
        _, g = loss_and_gradient(linear_model(W, b), x, y)
        r = x @ W.T + b - y
        np.testing.assert_allclose(g[:6].reshape(2, 3), 2 * r.T @ x / r.size, atol=1e-8)
        np.testing.assert_allclose(g[6:], 2 * r.sum(axis=0) / r.size, atol=1e-8)

    def test_batch_statistics_mode(self):
        rng = np.random.default_rng(5)
        m = init_model(preset_architecture("single_target"), 2)
        x = smooth_inputs(m, rng, n=16)
        y = rng.uniform(size=(16, 1))
        _, analytic = loss_and_gradient(m, x, y, mode="train")
        from nbm_detect.mlp import finite_difference_gradient
        numeric = finite_difference_gradient(m, x, y, 1e-5, mode="train")
        np.testing.assert_allclose(analytic, numeric, rtol=1e-4, atol=1e-9)

    def test_bad_epsilon(self):
        m = init_model(preset_architecture("single_target"))
        with pytest.raises(ModelError):
            gradient_check(m, [0.1, 0.2, 0.3], [0.0], epsilon=0.0)


class TestTrain:
    @pytest.mark.parametrize("kind", ["multi_target", "single_target"])
    def test_constant_target(self, kind):
        # 200 samples at batch 64 give only 800 updates; lr 1e-3 leaves RMSE near 0.1 there.
        rng = np.random.default_rng(0)
        arch = preset_architecture(kind)
        ds = RegressionDataset(rng.uniform(size=(200, 3)), np.full((200, arch.output_dim), 0.7))
        model, rep = train(ds, arch, TrainConfig(epochs=200, learning_rate=1e-2, seed=1))
        pred = predict_series(model, np.vstack([ds.features, rng.uniform(size=(50, 3))]))
        assert np.abs(pred - 0.7).max() < 0.05
        assert len(rep.epoch_losses) == 200

    def test_zero_learning_rate(self):
        rng = np.random.default_rng(0)
        ds = RegressionDataset(rng.uniform(size=(100, 3)), rng.uniform(size=(100, 3)))
        arch = preset_architecture("multi_target")
        model, _ = train(ds, arch, TrainConfig(epochs=3, learning_rate=0.0, seed=9))
        assert np.array_equal(model.params, init_model(arch, 9).params)

    def test_linear_target(self):
        rng = np.random.default_rng(1)
        x = rng.uniform(size=(2000, 3))
        arch = MlpArchitecture(hidden_layers=(), output_dim=1, dropout_rate=0.0)
        model, _ = train(RegressionDataset(x, 0.5 * x[:, :1]), arch, TrainConfig(seed=0))
        assert evaluate_error(model, RegressionDataset(x, 0.5 * x[:, :1])).rmse[0] < 0.02

    def test_deterministic(self):
        rng = np.random.default_rng(2)
        ds = RegressionDataset(rng.uniform(size=(300, 3)), rng.uniform(size=(300, 3)))
        arch = preset_architecture("multi_target")
        a, ra = train(ds, arch, TrainConfig(epochs=5, seed=4))
        b, rb = train(ds, arch, TrainConfig(epochs=5, seed=4))
        assert a.equals(b) and ra.epoch_losses == rb.epoch_losses
        assert model_to_bytes(a) == model_to_bytes(b)

    def test_running_stats_updated(self):
        rng = np.random.default_rng(2)
        ds = RegressionDataset(rng.uniform(size=(300, 3)), rng.uniform(size=(300, 1)))
        model, _ = train(ds, preset_architecture("single_target"), TrainConfig(epochs=2, seed=4))
        assert model.trained
        assert model.running_views()[0]["running_mean"].any()

    def test_early_stopping(self):
        rng = np.random.default_rng(0)
        ds = RegressionDataset(rng.uniform(size=(200, 3)), np.full((200, 1), 0.5))
        _, rep = train(ds, preset_architecture("single_target"),
                       TrainConfig(epochs=500, learning_rate=0.0, patience=3, seed=0))
        assert rep.stopped_early and rep.epochs_run < 500

    def test_too_small(self):
        ds = RegressionDataset(np.zeros((10, 3)), np.zeros((10, 1)))
        with pytest.raises(TrainingError, match="batch_size"):
            train(ds, preset_architecture("single_target"), TrainConfig(batch_size=64))

    def test_empty(self):
        with pytest.raises(TrainingError, match="empty"):
            train(RegressionDataset(np.zeros((0, 3)), np.zeros((0, 1))), preset_architecture("single_target"))

    @pytest.mark.filterwarnings("ignore:overflow encountered")
    def test_non_finite_loss(self):
        ds = RegressionDataset(np.full((100, 3), 1e300), np.full((100, 1), 1e300))
        with pytest.raises(TrainingError) as info:
            train(ds, preset_architecture("single_target"), TrainConfig(epochs=2, seed=0))
        assert info.value.epoch == 1

    def test_target_dim_mismatch(self):
        ds = RegressionDataset(np.zeros((100, 3)), np.zeros((100, 2)))
        with pytest.raises(ModelError):
            train(ds, preset_architecture("multi_target"), TrainConfig(epochs=1))

    @pytest.mark.parametrize("bad", [dict(epochs=0), dict(batch_size=0), dict(learning_rate=-1.0),
                                     dict(optimizer="sgd")])
    def test_config_invariants(self, bad):
        with pytest.raises(ModelError):
            TrainConfig(**bad)


class TestSerialization:
    def test_round_trip_predictions(self, tmp_path):
        rng = np.random.default_rng(0)
        ds = RegressionDataset(rng.uniform(size=(300, 3)), rng.uniform(size=(300, 3)))
        model, _ = train(ds, preset_architecture("multi_target"), TrainConfig(epochs=3, seed=7))
        save_model(model, tmp_path / "m.nbm")
        back = load_model(tmp_path / "m.nbm")
        assert back.equals(model) and back.trained
        x = rng.uniform(size=(20, 3))
        assert np.array_equal(predict_series(back, x), predict_series(model, x))
        assert back.architecture == model.architecture and back.training_seed == 7

    def test_layout(self):
        blob = model_to_bytes(init_model(preset_architecture("single_target"), 3))
        assert blob[:8] == b"NBMMLP\x00\x01"
        n = int.from_bytes(blob[8:12], "little")
        import json
        header = json.loads(blob[12:12 + n])
        names = [t["name"] for t in header["tensors"]]
        assert names[:6] == ["layer0.weight", "layer0.bias", "layer0.gamma", "layer0.beta",
                             "layer0.running_mean", "layer0.running_var"]
        total = sum(math.prod(t["shape"]) for t in header["tensors"])
        assert len(blob) == 12 + n + 8 * total

    @pytest.mark.parametrize("mangle", [lambda b: b"XXXXXXXX" + b[8:], lambda b: b[:-8], lambda b: b + b"\0",
                                        lambda b: b[:12] + b"}" + b[13:]])
    def test_corrupt(self, mangle):
        blob = model_to_bytes(init_model(preset_architecture("single_target"), 3))
        with pytest.raises(ModelError):
            model_from_bytes(mangle(blob))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ModelError, match="not found"):
            load_model(tmp_path / "nope.nbm")

    def test_hidden_layer_without_batch_norm(self):
        arch = MlpArchitecture(hidden_layers=(HiddenLayer(3, False),), output_dim=1, dropout_rate=0.0)
        m = init_model(arch, 1)
        back = model_from_bytes(model_to_bytes(m))
        assert back.equals(m) and back.architecture == arch
