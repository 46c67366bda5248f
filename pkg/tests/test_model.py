import json

import numpy as np
import pytest

from poselstm.landmarks import (
    CLASS_REGISTRY,
    LandmarkFrame,
    PoseSequence,
    pad_or_truncate,
)
from poselstm.model import (
    ContractViolation,
    LstmLayerParams,
    ModelConfig,
    ModelFileError,
    ModelParams,
    forward,
    forward_batch,
    init_params,
    load_model,
    lstm_cell_step,
    param_count,
    save_model,
    softmax,
)

from conftest import random_params, random_sequence
from reference import naive_forward_logits, unpack_params


class TestParamCount:
    def test_default_topology(self):
        config = ModelConfig(input_dim=132, lstm_units=(64, 64), num_classes=4)
        assert param_count(config) == 83_716

    def test_allocated_scalars_match_formula(self):
        config = ModelConfig(input_dim=132, lstm_units=(64, 64), num_classes=4)
        params = init_params(config, seed=0)
        assert params.num_scalars() == 83_716

    def test_minimal_topology(self):
        # 4*(1*(1+1)+1) = 12 LSTM scalars, 1*2+2 dense (num_classes >= 2).
        config = ModelConfig(input_dim=1, lstm_units=(1,), num_classes=2, max_seq_len=4)
        assert param_count(config) == 16
        assert init_params(config, seed=1).num_scalars() == 16

    def test_two_class_head(self):
        config = ModelConfig(input_dim=132, lstm_units=(64, 64), num_classes=2)
        assert param_count(config) == 83_586
        assert init_params(config, seed=2).num_scalars() == 83_586


class TestModelConfig:
    def test_rejects_empty_units(self):
        with pytest.raises(ContractViolation):
            ModelConfig(lstm_units=())

    def test_rejects_tiny_head(self):
        with pytest.raises(ContractViolation):
            ModelConfig(num_classes=1)

    def test_layer_input_dims_chain(self):
        config = ModelConfig(input_dim=10, lstm_units=(5, 7, 3))
        assert config.layer_input_dims() == [10, 5, 7]


class TestInitParams:
    def test_deterministic(self):
        config = ModelConfig()
        a = init_params(config, seed=42)
        b = init_params(config, seed=42)
        for (_, x), (_, y) in zip(a.arrays(), b.arrays()):
            assert x.tobytes() == y.tobytes()

    def test_forget_gate_bias_is_one(self):
        config = ModelConfig(input_dim=6, lstm_units=(4, 3), num_classes=2, max_seq_len=4)
        params = init_params(config, seed=0)
        for layer in params.layers:
            u = layer.units
            b = layer.b
            assert np.all(b[u:2 * u] == 1.0)
            assert np.all(b[:u] == 0.0)
            assert np.all(b[2 * u:] == 0.0)

    def test_kernel_bounds(self):
        config = ModelConfig(input_dim=6, lstm_units=(4,), num_classes=3, max_seq_len=4)
        params = init_params(config, seed=3)
        d, u = 6, 4
        assert np.abs(params.layers[0].W).max() <= np.sqrt(6.0 / (d + 4 * u))
        assert np.abs(params.layers[0].U).max() <= np.sqrt(6.0 / (u + 4 * u))
        assert np.abs(params.dense_w).max() <= np.sqrt(6.0 / (u + 3))

    def test_stored_as_float32(self):
        params = init_params(ModelConfig(), seed=0)
        assert all(arr.dtype == np.float32 for _, arr in params.arrays())


def ones_layer(d=1, u=1, w=1.0, bias=0.0):
    return LstmLayerParams(
        W=np.full((4 * u, d), w, dtype=np.float64),
        U=np.full((4 * u, u), w, dtype=np.float64),
        b=np.full(4 * u, bias, dtype=np.float64),
    )


class TestLstmCellStep:
    def test_all_zero_everything_stays_zero(self):
        layer = ones_layer(w=0.0)
        h, c = lstm_cell_step(np.zeros(1), np.zeros(1), np.zeros(1), layer)
        assert h[0] == 0.0 and c[0] == 0.0

    def test_unit_weights_hand_values(self):
        # x=1, h=0, c=0, every weight 1, biases 0:
        # i = f = o = sigmoid(1), g = tanh(1), c' = i*g, h' = o*tanh(c').
        layer = ones_layer(w=1.0)
        h, c = lstm_cell_step(np.ones(1), np.zeros(1), np.zeros(1), layer)
        assert c[0] == pytest.approx(0.556769941146, abs=1e-9)
        assert h[0] == pytest.approx(0.369606352936, abs=1e-9)

    def test_forget_bias_carries_state(self):
        # All weights zero, forget bias 1, c=2: c' = sigmoid(1)*2,
        # h' = sigmoid(0)*tanh(c') = 0.5*tanh(c').
        layer = ones_layer(w=0.0)
        layer.b[1] = 1.0
        h, c = lstm_cell_step(np.zeros(1), np.zeros(1), np.full(1, 2.0), layer)
        assert c[0] == pytest.approx(1.462117157260, abs=1e-9)
        assert h[0] == pytest.approx(0.449031505730, abs=1e-9)

    def test_recurrent_mask_scales_h(self):
        rng = np.random.default_rng(5)
        layer = LstmLayerParams(
            W=rng.normal(size=(8, 3)), U=rng.normal(size=(8, 2)), b=rng.normal(size=8))
        x, h, c = rng.normal(size=3), rng.normal(size=2), rng.normal(size=2)
        masked = lstm_cell_step(x, h, c, layer, recurrent_mask=np.zeros(2))
        plain = lstm_cell_step(x, np.zeros(2), c, layer)
        assert np.array_equal(masked[0], plain[0])
        assert np.array_equal(masked[1], plain[1])

    def test_shape_mismatch_rejected(self):
        layer = ones_layer(d=2, u=1)
        with pytest.raises(ContractViolation):
            lstm_cell_step(np.zeros(3), np.zeros(1), np.zeros(1), layer)


class TestSoftmax:
    def test_uniform(self):
        assert np.allclose(softmax(np.zeros(4)), 0.25)

    def test_large_logits_no_overflow(self):
        p = softmax(np.array([1000.0, 0.0]))
        assert p[0] == pytest.approx(1.0)
        assert p[1] == pytest.approx(0.0, abs=1e-300)
        assert np.isfinite(p).all()

    def test_shift_invariance(self, rng):
        z = rng.normal(size=6)
        assert np.allclose(softmax(z), softmax(z + 123.456), atol=1e-12)

    def test_rejects_non_finite(self):
        with pytest.raises(ContractViolation):
            softmax(np.array([np.nan, 0.0]))

    def test_sums_to_one(self, rng):
        for _ in range(20):
            z = rng.normal(scale=10, size=5)
            assert abs(softmax(z).sum() - 1.0) < 1e-9


class TestForward:
    def config(self):
        return ModelConfig(max_seq_len=8)

    def test_all_padding_gives_softmax_of_bias(self, rng):
        config = self.config()
        params = random_params(config, rng, dtype=np.float32)
        seq = PoseSequence(frames=tuple(LandmarkFrame.padding() for _ in range(8)))
        assert seq.real_len == 0
        probs, logits = forward(seq, params, config)
        assert np.array_equal(logits, params.dense_b)
        assert np.allclose(probs.probs, softmax(params.dense_b.astype(np.float64)), atol=1e-7)

    def test_probs_sum_to_one(self, rng):
        config = self.config()
        params = random_params(config, rng, dtype=np.float32)
        for _ in range(10):
            seq = random_sequence(rng, real_len=5, total_len=8)
            probs, _ = forward(seq, params, config)
            # Probabilities are stored in float32, so allow float32 rounding.
            assert abs(float(probs.probs.sum()) - 1.0) < 1e-6
            assert probs.probs.shape == (4,)

    def test_tail_padding_never_changes_logits(self, rng):
        config = self.config()
        params = random_params(config, rng, dtype=np.float32)
        seq8 = random_sequence(rng, real_len=5, total_len=8)
        seq12 = pad_or_truncate(list(seq8.frames[:5]), 12)
        _, logits8 = forward(seq8, params, config)
        _, logits12 = forward(seq12, params, config)
        assert logits8.tobytes() == logits12.tobytes()

    def test_infer_rejects_dropout_masks(self, rng):
        config = self.config()
        params = random_params(config, rng, dtype=np.float32)
        seq = random_sequence(rng, real_len=3, total_len=8)
        with pytest.raises(ContractViolation):
            forward(seq, params, config, mode="infer", dropout_masks=[np.ones((1, 64))] * 2)

    def test_label_comes_from_registry(self, rng):
        config = self.config()
        params = random_params(config, rng, dtype=np.float32)
        seq = random_sequence(rng, real_len=3, total_len=8)
        probs, logits = forward(seq, params, config)
        assert probs.argmax_label.name == CLASS_REGISTRY[int(np.argmax(logits))]


class TestForwardAgainstNaiveReference:
    def test_random_tiny_instances(self):
        rng = np.random.default_rng(99)
        for trial in range(60):
            d = int(rng.integers(1, 4))
            units = tuple(int(rng.integers(1, 4)) for _ in range(int(rng.integers(1, 3))))
            k = int(rng.integers(2, 4))
            t = int(rng.integers(1, 6))
            config = ModelConfig(input_dim=d, lstm_units=units, num_classes=k, max_seq_len=t)
            params = random_params(config, rng, dtype=np.float64)
            x = rng.normal(size=(1, t, d))
            mask = (rng.random((1, t)) < 0.7).astype(np.float64)
            mask[0, int(rng.integers(0, t))] = 1.0
            logits = forward_batch(x, mask, params)[0]
            layers, dense_w, dense_b = unpack_params(params)
            expected = naive_forward_logits(x[0], mask[0], layers, dense_w, dense_b)
            err = np.abs(logits - np.asarray(expected)).max()
            assert err < 1e-12, f"trial {trial}: naive reference disagrees by {err}"

    def test_padded_steps_skipped_exactly(self):
        rng = np.random.default_rng(17)
        config = ModelConfig(input_dim=2, lstm_units=(3,), num_classes=2, max_seq_len=6)
        params = random_params(config, rng, dtype=np.float64)
        x = rng.normal(size=(1, 6, 2))
        mask = np.array([[1.0, 0.0, 1.0, 0.0, 0.0, 1.0]])
        # Garbage at masked steps must be invisible.
        x_garbage = x.copy()
        x_garbage[0, mask[0] == 0.0] = 1e6
        a = forward_batch(x, mask, params)
        b = forward_batch(x_garbage, mask, params)
        assert a.tobytes() == b.tobytes()


class TestModelFile:
    def setup_model(self, tmp_path, rng, config=None):
        config = config or ModelConfig(input_dim=6, lstm_units=(4, 3), num_classes=4,
                                       max_seq_len=5)
        params = random_params(config, rng, dtype=np.float32)
        path = tmp_path / "model.plm"
        save_model(params, config, path)
        return params, config, path

    def test_round_trip_bit_exact(self, tmp_path, rng):
        params, config, path = self.setup_model(tmp_path, rng)
        loaded = load_model(path)
        assert loaded.config == config
        assert loaded.class_names == CLASS_REGISTRY
        for (name, a), (_, b) in zip(loaded.params.arrays(), params.arrays()):
            assert a.tobytes() == b.tobytes(), name

    def test_save_twice_identical_bytes(self, tmp_path, rng):
        params, config, path = self.setup_model(tmp_path, rng)
        path2 = tmp_path / "model2.plm"
        save_model(params, config, path2)
        assert path.read_bytes() == path2.read_bytes()

    def test_truncated_payload_names_checksum(self, tmp_path, rng):
        _, _, path = self.setup_model(tmp_path, rng)
        blob = path.read_bytes()
        path.write_bytes(blob[:-8])
        with pytest.raises(ModelFileError, match="checksum"):
            load_model(path)

    def test_corrupted_payload_names_checksum(self, tmp_path, rng):
        _, _, path = self.setup_model(tmp_path, rng)
        blob = bytearray(path.read_bytes())
        blob[-1] ^= 0xFF
        path.write_bytes(bytes(blob))
        with pytest.raises(ModelFileError, match="checksum_sha256"):
            load_model(path)

    def test_wrong_version_named(self, tmp_path, rng):
        _, _, path = self.setup_model(tmp_path, rng)
        blob = path.read_bytes()
        nl = blob.find(b"\n")
        header = json.loads(blob[:nl])
        header["format_version"] = 9
        path.write_bytes(json.dumps(header, separators=(",", ":")).encode() + blob[nl:])
        with pytest.raises(ModelFileError, match="format_version"):
            load_model(path)

    def test_gate_order_tag_checked(self, tmp_path, rng):
        _, _, path = self.setup_model(tmp_path, rng)
        blob = path.read_bytes()
        nl = blob.find(b"\n")
        header = json.loads(blob[:nl])
        header["gate_order"] = "iofg"
        path.write_bytes(json.dumps(header, separators=(",", ":")).encode() + blob[nl:])
        with pytest.raises(ModelFileError, match="gate_order"):
            load_model(path)

    def test_shape_mismatch_names_tensor(self, tmp_path, rng):
        _, config, path = self.setup_model(tmp_path, rng)
        blob = path.read_bytes()
        nl = blob.find(b"\n")
        header = json.loads(blob[:nl])
        header["config"]["lstm_units"] = [4, 2]
        path.write_bytes(json.dumps(header, separators=(",", ":")).encode() + blob[nl:])
        with pytest.raises(ModelFileError, match="lstm1"):
            load_model(path)

    def test_registry_size_mismatch_named(self, tmp_path, rng):
        _, _, path = self.setup_model(tmp_path, rng)
        blob = path.read_bytes()
        nl = blob.find(b"\n")
        header = json.loads(blob[:nl])
        header["class_registry"] = ["A", "B"]
        path.write_bytes(json.dumps(header, separators=(",", ":")).encode() + blob[nl:])
        with pytest.raises(ModelFileError, match="class_registry"):
            load_model(path)

    def test_loaded_params_are_writable(self, tmp_path, rng):
        _, _, path = self.setup_model(tmp_path, rng)
        loaded = load_model(path)
        loaded.params.dense_b[0] = 7.0
        assert loaded.params.dense_b[0] == 7.0

    def test_class_names_length_enforced_on_save(self, tmp_path, rng):
        config = ModelConfig(input_dim=4, lstm_units=(2,), num_classes=4, max_seq_len=4)
        params = random_params(config, rng, dtype=np.float32)
        with pytest.raises(ContractViolation):
            save_model(params, config, tmp_path / "m.plm", class_names=("A", "B"))
