import io

import numpy as np
import pytest
from pydantic import ValidationError

from src.eegio.recording import Label
from src.exceptions import CheckpointError, ShapeError
from src.grad import layers
from src.grad.gradcheck import gradcheck
from src.grad.tensor import Tensor
from src.model.accounting import count_flops, count_params, flops_summary, layer_costs
from src.model.bench import benchmark
from src.model.checkpoint import decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint
from src.model.config import ModelConfig, TrainConfig
from src.model.network import Classifier, DeepTokenEEG, ResBlock1D, Tokenizer
from src.model.training import init_model, predict_segments, predict_subject, predict_subjects, train


def separable_toy(n=64, seg_len=16, seed=0):
    """Class 1 segments sit above zero, class 0 below"""
    rng = np.random.default_rng(seed)
    y = np.arange(n) % 2
    x = 0.3 * rng.standard_normal((n, 19, seg_len)) + np.where(y == 1, 1.0, -1.0)[:, None, None]
    return x, y


def test_default_parameter_count():
    config = ModelConfig()
    assert count_params(config) == 252_762
    assert DeepTokenEEG(config).n_params == 252_762


def test_parameter_breakdown():
    costs = {c.name: c.params for c in layer_costs(ModelConfig())}
    assert costs["tokenizer.depthwise"] + costs["tokenizer.pointwise"] == 2712
    stage = sum(p for name, p in costs.items() if name.startswith("encoder.0."))
    assert stage == 83_008
    assert costs["classifier.norm"] + costs["classifier.linear"] == 1026


def test_tiny_flops(tiny_config):
    assert count_flops(tiny_config) == 5330
    assert count_flops(tiny_config, batch_size=3) == 3 * 5330
    assert count_params(tiny_config) == DeepTokenEEG(tiny_config).n_params == 380


def test_flops_summary_scales():
    config = ModelConfig()
    summary = flops_summary(config)
    assert summary["per_batch"] == 128 * summary["per_segment"]
    assert summary["gflops_per_segment"] == pytest.approx(summary["per_segment"] / 1e9)
    assert count_flops(config, seg_len=256) > count_flops(config)


def test_stage_dilations():
    assert ModelConfig(n_stages=3).stage_dilations() == [2, 2, 2]
    assert ModelConfig(n_stages=3, dilation_mode="exponential").stage_dilations() == [2, 4, 8]
    assert ModelConfig(n_stages=2, dilations=[1, 3]).stage_dilations() == [1, 3]


@pytest.mark.parametrize("kwargs", [{"n_stages": 0}, {"n_stages": 6}, {"k_res": 4}, {"n_stages": 2, "dilations": [2]},
                                    {"dropout": 1.0}, {"unknown": 1}])
def test_model_config_rejects(kwargs):
    with pytest.raises(ValidationError):
        ModelConfig(**kwargs)


def test_dilation_does_not_change_parameter_count():
    a = ModelConfig(n_stages=3, dilation_mode="constant")
    b = ModelConfig(n_stages=3, dilation_mode="exponential")
    assert count_params(a) == count_params(b)
    assert count_flops(a) == count_flops(b)


def test_forward_shapes(tiny_config, rng):
    model = init_model(tiny_config, seed=0).eval()
    logits = model.forward(rng.standard_normal((5, 19, 8)))
    assert logits.shape == (5, 2)
    assert model.forward(rng.standard_normal((2, 19, 32))).shape == (2, 2)
    with pytest.raises(ShapeError, match="wrong channel count"):
        model.forward(rng.standard_normal((2, 18, 8)))


def identity_conv(channels):
    return np.eye(channels)[:, :, None]


def test_tokenizer_identity_and_channel_isolation(rng):
    config = ModelConfig(n_channels=4, seg_len=16, d_model=4, bottleneck=2, n_stages=1)
    tokenizer = Tokenizer(config)
    tokenizer.pointwise.weight.value = identity_conv(4)
    tokenizer.depthwise.weight.value[:, 0, config.k_token // 2] = 1.0
    x = rng.standard_normal((2, 4, 16))
    np.testing.assert_allclose(tokenizer(Tensor(x)).value, x)

    tokenizer.depthwise.reset_parameters(rng)
    bumped = x.copy()
    bumped[:, 2] += rng.standard_normal((2, 16))
    changed = np.abs(tokenizer(Tensor(bumped)).value - tokenizer(Tensor(x)).value).max(axis=(0, 2))
    assert changed[2] > 0
    np.testing.assert_allclose(changed[[0, 1, 3]], 0.0, atol=1e-12)


def test_tokenizer_zero_input_gives_broadcast_bias(rng):
    config = ModelConfig(n_channels=5, seg_len=16, d_model=3, bottleneck=2, n_stages=1)
    tokenizer = Tokenizer(config)
    tokenizer.reset_parameters(rng)
    out = tokenizer(Tensor(np.zeros((2, 5, 16)))).value
    expected = tokenizer.pointwise.weight.value[:, :, 0] @ tokenizer.depthwise.bias.value + tokenizer.pointwise.bias.value
    np.testing.assert_allclose(out, np.broadcast_to(expected[None, :, None], out.shape), atol=1e-12)


def test_resblock_zero_weights_and_shortcut_only(rng):
    block = ResBlock1D(d_model=4, bottleneck=2, kernel_size=3, dilation=2).eval()
    x = rng.standard_normal((3, 4, 10))
    np.testing.assert_array_equal(block(Tensor(x)).value, 0.0)

    block.shortcut.weight.value = identity_conv(4)
    np.testing.assert_allclose(block(Tensor(x)).value, np.maximum(x, 0.0) / np.sqrt(1 + block.shortcut_bn.eps))


def test_single_stage_reduces_to_cross_conv(rng):
    config = ModelConfig(n_channels=19, seg_len=8, d_model=4, bottleneck=2, n_stages=1)
    model = init_model(config, seed=0, dtype="float64").eval()
    resblock = model.encoder[0].resblock
    for name, p in resblock.named_parameters():
        if "bn" not in name:
            p.value = np.zeros_like(p.value)
    model.encoder[0].crossconv.weight.value = identity_conv(4)
    model.encoder[0].crossconv.bias.value = np.zeros(4)
    x = Tensor(rng.standard_normal((2, 19, 8)))
    np.testing.assert_allclose(model.encode(x).value, model.tokenizer(x).value, atol=1e-12)


def test_classifier_ignores_constant_features(tiny_config, rng):
    classifier = Classifier(tiny_config)
    classifier.reset_parameters(rng)
    classifier.eval()
    logits = classifier(Tensor(np.full((3, tiny_config.d_model, 8), 2.5))).value
    np.testing.assert_allclose(logits, np.broadcast_to(classifier.linear.bias.value, logits.shape), atol=1e-12)


def test_forward_is_batch_permutation_equivariant(tiny_config, rng):
    model = init_model(tiny_config, seed=2, dtype="float64").eval()
    x = rng.standard_normal((6, 19, 8))
    order = rng.permutation(6)
    np.testing.assert_allclose(model.forward(x[order]).value, model.forward(x).value[order], atol=1e-12)


def test_parameter_names(tiny_config):
    names = [name for name, _ in init_model(tiny_config, seed=0).named_parameters()]
    assert names[0] == "tokenizer.depthwise.weight"
    assert "encoder.0.resblock.conv1.weight" in names
    assert names[-1] == "classifier.linear.bias"


def test_init_is_seeded(tiny_config):
    a = init_model(tiny_config, seed=3, stream_id=(0, 1)).state_dict()
    b = init_model(tiny_config, seed=3, stream_id=(0, 1)).state_dict()
    c = init_model(tiny_config, seed=3, stream_id=(0, 2)).state_dict()
    assert all(np.array_equal(a[k], b[k]) for k in a)
    assert not np.array_equal(a["tokenizer.depthwise.weight"], c["tokenizer.depthwise.weight"])
    bound = np.sqrt(1.0 / 7)
    assert np.abs(a["tokenizer.depthwise.weight"]).max() <= bound
    np.testing.assert_array_equal(a["classifier.norm.weight"], 1.0)


def test_full_network_gradcheck(tiny_config, rng):
    model = init_model(tiny_config, seed=1, dtype="float64").eval()
    x = rng.standard_normal((3, 19, 8))
    labels = np.array([0, 1, 1])
    result = gradcheck(lambda tape: layers.cross_entropy(model.forward(x, tape), labels, tape),
                       dict(model.named_parameters()))
    assert result.checked > 0
    assert result.max_rel_error < 1e-4


def test_resblock_train_mode_gradcheck(rng):
    block = ResBlock1D(d_model=4, bottleneck=3, kernel_size=3, dilation=2)
    block.reset_parameters(rng)
    x = Tensor(rng.standard_normal((2, 4, 12)))
    weights = rng.standard_normal((2, 4, 12))

    def loss(tape):
        y = block(x, tape)
        return layers._apply(tape, (y,), np.asarray(np.sum(y.value * weights)), lambda g: (g * weights,))

    result = gradcheck(loss, {"x": x, **dict(block.named_parameters())})
    assert result.max_rel_error < 1e-4


def test_loss_and_grads_covers_every_parameter(tiny_config, rng):
    model = init_model(tiny_config, seed=0)
    loss, grads = model.loss_and_grads(rng.standard_normal((4, 19, 8)), np.array([0, 1, 0, 1]), rng)
    assert np.isfinite(loss)
    assert set(grads) == {name for name, _ in model.named_parameters()}
    assert all(grads[name].shape == p.shape for name, p in model.named_parameters())


def test_training_is_deterministic(tiny_config):
    x, y = separable_toy(n=24, seg_len=8)
    cfg = TrainConfig(epochs=3, batch_size=8, lr=1e-2, dtype="float64")
    config = tiny_config.model_copy(update={"dropout": 0.2})
    a = train(x, y, config, cfg, seed=5, stream_id=(0, 0))
    b = train(x, y, config, cfg, seed=5, stream_id=(0, 0))
    c = train(x, y, config, cfg, seed=5, stream_id=(0, 1))
    assert a.history == b.history
    state_a, state_b = a.model.state_dict(), b.model.state_dict()
    assert all(np.array_equal(state_a[k], state_b[k]) for k in state_a)
    assert a.history != c.history


def test_zero_epochs_returns_initial_model(tiny_config):
    x, y = separable_toy(n=8, seg_len=8)
    result = train(x, y, tiny_config, TrainConfig(epochs=0), seed=2)
    assert result.history == []
    assert not result.model.training
    init = init_model(tiny_config, seed=2, dtype="float32").state_dict()
    state = result.model.state_dict()
    assert all(np.array_equal(init[k], state[k]) for k in init)


def test_zero_learning_rate_keeps_parameters(tiny_config):
    x, y = separable_toy(n=16, seg_len=8)
    result = train(x, y, tiny_config, TrainConfig(epochs=2, batch_size=8, lr=0.0, dtype="float64"), seed=4)
    init = dict(init_model(tiny_config, seed=4).named_parameters())
    for name, p in result.model.named_parameters():
        np.testing.assert_array_equal(p.value, init[name].value)
    assert not np.array_equal(result.model.encoder[0].resblock.bn1.running_mean, 0.0)


def test_training_separates_toy_classes():
    config = ModelConfig(seg_len=16, d_model=8, bottleneck=4, n_stages=1, dropout=0.0)
    x, y = separable_toy(n=64, seg_len=16)
    result = train(x, y, config, TrainConfig(epochs=30, batch_size=16, lr=1e-2), seed=0)
    assert result.history[-1] < 0.5 * result.history[0]
    _, pred = predict_segments(result.model, x)
    assert np.mean(pred == y) >= 0.95


def test_training_reports_progress(tiny_config):
    x, y = separable_toy(n=8, seg_len=8)
    events = []
    train(x, y, tiny_config, TrainConfig(epochs=2, batch_size=4), progress_callback=lambda s, d: events.append((s, d)))
    assert [d["epoch"] for s, d in events if s == "epoch_complete"] == [1, 2]


def test_train_rejects_mismatched_labels(tiny_config):
    x, _ = separable_toy(n=8, seg_len=8)
    with pytest.raises(ShapeError):
        train(x, np.zeros(5, dtype=int), tiny_config, TrainConfig(epochs=1))


def test_zero_model_predicts_one_half(tiny_config, rng):
    model = DeepTokenEEG(tiny_config).eval()
    probs, _ = predict_segments(model, rng.standard_normal((3, 19, 8)))
    np.testing.assert_allclose(probs, 0.5)


def test_prediction_is_batch_invariant(tiny_config, rng):
    model = init_model(tiny_config, seed=0, dtype="float64").eval()
    x = rng.standard_normal((7, 19, 8))
    together, _ = predict_segments(model, x)
    one_by_one, _ = predict_segments(model, x, batch_size=1)
    np.testing.assert_allclose(together, one_by_one, atol=1e-6)
    np.testing.assert_allclose(together.sum(axis=1), 1.0)


def test_subject_vote():
    assert predict_subject([0, 0, 1]) is Label.HC
    assert predict_subject([1, 1, 0]) is Label.AD
    assert predict_subject([0, 1]) is Label.AD
    with pytest.raises(ValueError):
        predict_subject([])
    votes = predict_subjects(["b", "a", "b", "a"], [1, 0, 1, 1])
    assert list(votes) == ["b", "a"]
    assert votes == {"b": Label.AD, "a": Label.AD}


def test_checkpoint_round_trip(tiny_config, tmp_path, rng):
    x, y = separable_toy(n=16, seg_len=8)
    model = train(x, y, tiny_config, TrainConfig(epochs=1, batch_size=8)).model
    path = tmp_path / "model.dtkc"
    save_checkpoint(model, path)
    loaded = load_checkpoint(path)
    assert loaded.config == model.config
    assert not loaded.training
    before, after = model.state_dict(), loaded.state_dict()
    assert list(before) == list(after)
    assert all(np.array_equal(before[k], after[k]) for k in before)
    batch = rng.standard_normal((4, 19, 8)).astype(np.float32)
    np.testing.assert_allclose(loaded.forward(batch).value, model.forward(batch).value, atol=1e-6)
    assert encode_checkpoint(loaded) == encode_checkpoint(model)


def test_checkpoint_rejects_corruption(tiny_config):
    blob = encode_checkpoint(init_model(tiny_config, seed=0, dtype="float32"))
    with pytest.raises(CheckpointError, match="bad magic"):
        decode_checkpoint(io.BytesIO(b"NOPE" + blob[4:]))
    with pytest.raises(CheckpointError, match="truncated"):
        decode_checkpoint(io.BytesIO(blob[:-3]))
    with pytest.raises(CheckpointError, match="trailing"):
        decode_checkpoint(io.BytesIO(blob + b"\x00"))


def _first_tensor_name_offset(blob):
    config_len = int.from_bytes(blob[6:10], "little")
    return 10 + config_len + 4 + 2


def test_checkpoint_rejects_bad_tensor_name(tiny_config):
    blob = bytearray(encode_checkpoint(init_model(tiny_config, seed=0, dtype="float32")))
    blob[_first_tensor_name_offset(blob)] = 0xFF
    with pytest.raises(CheckpointError, match="UTF-8"):
        decode_checkpoint(io.BytesIO(bytes(blob)))


def test_checkpoint_rejects_oversized_tensor(tiny_config):
    blob = bytearray(encode_checkpoint(init_model(tiny_config, seed=0, dtype="float32")))
    at = _first_tensor_name_offset(blob)
    name_len = int.from_bytes(blob[at - 2:at], "little")
    dims = at + name_len + 1
    blob[dims:dims + 4] = (0xFFFFFFFF).to_bytes(4, "little")
    with pytest.raises(CheckpointError, match="truncated"):
        decode_checkpoint(io.BytesIO(bytes(blob)))


def test_benchmark_reports_counts(tiny_config):
    results = benchmark(tiny_config, seconds=0.05, batch_size=4, seed=0)
    assert results["params"] == 380
    assert results["per_segment"] == 5330
    assert results["segments"] >= 4


def test_benchmark_with_zero_seconds_times_one_batch(tiny_config):
    results = benchmark(tiny_config, seconds=0.0, batch_size=2, seed=0)
    assert results["segments"] >= 2
    assert results["throughput"] > 0
    assert results["throughput"] > 0
