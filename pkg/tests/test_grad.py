import numpy as np
import pytest

from src.exceptions import GradientError, ShapeError
from src.grad import functional as F
from src.grad import layers
from src.grad.gradcheck import gradcheck
from src.grad.layers import BatchNorm1d, Conv1d, Dropout, LayerNorm, Linear
from src.grad.optim import AdamState, adam_step
from src.grad.rng import derive_seed, stream
from src.grad.tensor import Tape, Tensor


def weighted_sum(y: Tensor, weights: np.ndarray, tape):
    """sum(y * R) as a tape op"""
    return layers._apply(tape, (y,), np.asarray(np.sum(y.value * weights)), lambda g: (g * weights,))


def reference_conv(x, w, b, dilation, groups):
    batch, c_in, length = x.shape
    c_out, c_in_g, k = w.shape
    out_per_group = c_out // groups
    pad = dilation * (k - 1) // 2
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad)))
    y = np.zeros((batch, c_out, length))
    for o in range(c_out):
        g = o // out_per_group
        for c in range(c_in_g):
            for j in range(k):
                y[:, o] += w[o, c, j] * xp[:, g * c_in_g + c, j * dilation: j * dilation + length]
        y[:, o] += b[o]
    return y


@pytest.mark.parametrize("dilation,groups", [(1, 1), (2, 1), (4, 2), (1, 4)])
def test_conv_matches_direct_loops(rng, dilation, groups):
    x = rng.standard_normal((2, 4, 16))
    w = rng.standard_normal((8, 4 // groups, 3))
    b = rng.standard_normal(8)
    y, _ = F.conv1d_forward(x, w, b, dilation, groups)
    np.testing.assert_allclose(y, reference_conv(x, w, b, dilation, groups), atol=1e-12)


def test_conv_rejects_bad_shapes(rng):
    with pytest.raises(ShapeError):
        F.conv1d_forward(rng.standard_normal((2, 3, 16)), rng.standard_normal((4, 4, 3)))
    with pytest.raises(ShapeError):
        Conv1d(4, 4, 4)


@pytest.mark.parametrize("dilation,groups", [(1, 1), (2, 1), (1, 3)])
def test_conv_gradcheck(rng, dilation, groups):
    conv = Conv1d(3, 6, 3, dilation=dilation, groups=groups)
    conv.reset_parameters(rng)
    x = Tensor(rng.standard_normal((2, 3, 12)))
    weights = rng.standard_normal((2, 6, 12))
    result = gradcheck(lambda tape: weighted_sum(conv(x, tape), weights, tape),
                       {"x": x, "weight": conv.weight, "bias": conv.bias}, h=1e-4)
    assert result.checked > 0
    assert result.max_rel_error < 1e-6


def test_batchnorm_train_statistics(rng):
    bn = BatchNorm1d(3)
    x = rng.normal(2.0, 3.0, size=(4, 3, 10))
    y = bn(Tensor(x)).value
    np.testing.assert_allclose(y.mean(axis=(0, 2)), 0.0, atol=1e-6)
    np.testing.assert_allclose(y.var(axis=(0, 2)), 1.0, atol=1e-4)
    n = 40
    expected_var = 0.9 + 0.1 * x.var(axis=(0, 2)) * n / (n - 1)
    np.testing.assert_allclose(bn.running_var, expected_var)
    np.testing.assert_allclose(bn.running_mean, 0.1 * x.mean(axis=(0, 2)))


def test_batchnorm_eval_uses_running_stats(rng):
    bn = BatchNorm1d(2).eval()
    bn.running_mean = np.array([1.0, -1.0])
    bn.running_var = np.array([4.0, 0.25])
    x = rng.standard_normal((3, 2, 5))
    y = bn(Tensor(x)).value
    np.testing.assert_allclose(y[:, 0], (x[:, 0] - 1.0) / np.sqrt(4.0 + 1e-5))
    np.testing.assert_allclose(y[:, 1], (x[:, 1] + 1.0) / np.sqrt(0.25 + 1e-5))


def test_batchnorm_single_value_rejected():
    with pytest.raises(ShapeError):
        BatchNorm1d(2)(Tensor(np.zeros((1, 2, 1))))


@pytest.mark.parametrize("training", [True, False])
def test_batchnorm_gradcheck(rng, training):
    bn = BatchNorm1d(4).train(training)
    bn.weight.value = rng.uniform(0.5, 1.5, 4)
    bn.bias.value = rng.standard_normal(4)
    x = Tensor(rng.standard_normal((3, 4, 10)))
    weights = rng.standard_normal((3, 4, 10))
    result = gradcheck(lambda tape: weighted_sum(bn(x, tape), weights, tape),
                       {"x": x, "weight": bn.weight, "bias": bn.bias})
    assert result.max_rel_error < 1e-4


def test_relu_gradcheck_skips_kinks(rng):
    x = Tensor(rng.standard_normal((2, 3, 20)))
    weights = rng.standard_normal((2, 3, 20))
    result = gradcheck(lambda tape: weighted_sum(layers.relu(x, tape), weights, tape), {"x": x}, h=1e-6)
    assert result.max_rel_error < 1e-6


@pytest.mark.parametrize("kind", ["avg", "max"])
@pytest.mark.parametrize("out_len", [1, 3])
def test_adaptive_pool_gradcheck(rng, kind, out_len):
    x = Tensor(rng.standard_normal((2, 3, 10)))
    weights = rng.standard_normal((2, 3, out_len))
    result = gradcheck(lambda tape: weighted_sum(layers.adaptive_pool(x, kind, out_len, tape), weights, tape), {"x": x})
    assert result.max_rel_error < 1e-6


def test_adaptive_pool_values():
    x = np.array([[[1.0, 5.0, 2.0, 5.0, 0.0]]])
    avg, _ = F.adaptive_pool_forward(x, "avg", 1)
    mx, cache = F.adaptive_pool_forward(x, "max", 1)
    assert avg[0, 0, 0] == pytest.approx(2.6)
    assert mx[0, 0, 0] == 5.0
    assert cache.argmax[0, 0, 0] == 1
    grad = F.adaptive_pool_backward(np.ones((1, 1, 1)), cache)
    np.testing.assert_array_equal(grad[0, 0], [0, 1, 0, 0, 0])


def test_layernorm_is_scale_invariant(rng):
    norm = LayerNorm(6)
    x = 10.0 * rng.standard_normal((4, 6))
    y = norm(Tensor(x)).value
    np.testing.assert_allclose(y.mean(axis=1), 0.0, atol=1e-6)
    np.testing.assert_allclose(y.var(axis=1), 1.0, atol=1e-4)
    np.testing.assert_allclose(norm(Tensor(7.5 * x)).value, y, atol=1e-6)


def test_layernorm_gradcheck(rng):
    norm = LayerNorm(5)
    norm.weight.value = rng.uniform(0.5, 1.5, 5)
    norm.bias.value = rng.standard_normal(5)
    x = Tensor(rng.standard_normal((3, 5)))
    weights = rng.standard_normal((3, 5))
    result = gradcheck(lambda tape: weighted_sum(norm(x, tape), weights, tape),
                       {"x": x, "weight": norm.weight, "bias": norm.bias})
    assert result.max_rel_error < 1e-4


def test_linear_identity_and_bias():
    lin = Linear(3, 3)
    lin.weight.value = np.eye(3)
    x = np.arange(6.0).reshape(2, 3)
    np.testing.assert_array_equal(lin(Tensor(x)).value, x)
    lin.weight.value = np.zeros((3, 3))
    lin.bias.value = np.array([1.0, 2.0, 3.0])
    np.testing.assert_array_equal(lin(Tensor(x)).value, [[1, 2, 3], [1, 2, 3]])


def test_linear_gradcheck(rng):
    lin = Linear(6, 3)
    lin.reset_parameters(rng)
    x = Tensor(rng.standard_normal((4, 6)))
    weights = rng.standard_normal((4, 3))
    result = gradcheck(lambda tape: weighted_sum(lin(x, tape), weights, tape),
                       {"x": x, "weight": lin.weight, "bias": lin.bias}, h=1e-4)
    assert result.max_rel_error < 1e-7


def test_cross_entropy_gradcheck(rng):
    logits = Tensor(rng.standard_normal((5, 2)))
    labels = np.array([0, 1, 1, 0, 1])
    result = gradcheck(lambda tape: layers.cross_entropy(logits, labels, tape), {"logits": logits})
    assert result.max_rel_error < 1e-6


def test_cross_entropy_values():
    loss, grad = F.softmax_cross_entropy(np.zeros((2, 2)), np.array([0, 1]))
    assert loss == pytest.approx(np.log(2))
    np.testing.assert_allclose(grad, [[-0.25, 0.25], [0.25, -0.25]])
    with pytest.raises(ShapeError, match="invalid label"):
        F.softmax_cross_entropy(np.zeros((2, 2)), np.array([0, 2]))


def test_concat_and_add_gradcheck(rng):
    a = Tensor(rng.standard_normal((2, 3, 4)))
    b = Tensor(rng.standard_normal((2, 3, 4)))
    weights = rng.standard_normal((2, 6, 4))

    def loss(tape):
        return weighted_sum(layers.concat([layers.add(a, b, tape), b], axis=1, tape=tape), weights, tape)

    assert gradcheck(loss, {"a": a, "b": b}, h=1e-4).max_rel_error < 1e-7


def test_corrupted_backward_is_detected(rng, monkeypatch):
    lin = Linear(4, 2)
    lin.reset_parameters(rng)
    x = Tensor(rng.standard_normal((3, 4)))
    weights = rng.standard_normal((3, 2))
    honest = F.linear_backward

    def corrupted(grad_out, cache):
        gx, gw, gb = honest(grad_out, cache)
        return gx, 1.5 * gw, gb

    monkeypatch.setattr(F, "linear_backward", corrupted)
    result = gradcheck(lambda tape: weighted_sum(lin(x, tape), weights, tape), {"weight": lin.weight}, h=1e-4)
    assert result.max_rel_error > 1e-2


def test_gradcheck_needs_float64():
    x = Tensor(np.zeros((2, 2), dtype=np.float32))
    with pytest.raises(GradientError, match="float64"):
        gradcheck(lambda tape: weighted_sum(x, np.ones((2, 2)), tape), {"x": x})


def test_tape_rejects_non_finite_loss():
    x = Tensor(np.array([1.0, 2.0]), requires_grad=True)
    tape = Tape()
    loss = weighted_sum(x, np.array([np.inf, 1.0]), tape)
    with pytest.raises(GradientError):
        tape.backward(loss)


def test_tape_accumulates_shared_inputs():
    x = Tensor(np.array([1.0, -2.0]), requires_grad=True)
    tape = Tape()
    loss = weighted_sum(layers.add(x, x, tape), np.array([1.0, 3.0]), tape)
    tape.backward(loss)
    np.testing.assert_array_equal(x.grad, [2.0, 6.0])
    assert len(tape) == 0


def test_dropout_modes(rng):
    drop = Dropout(0.5)
    x = Tensor(np.ones((1000,)))
    y = drop(x, rng=stream(0, "test"))
    kept = y.value[y.value > 0]
    np.testing.assert_allclose(kept, 2.0)
    assert 400 < kept.size < 600
    assert drop.eval()(x) is x
    with pytest.raises(ValueError):
        Dropout(1.0)
    with pytest.raises(ValueError):
        Dropout(0.5)(x)


def test_dropout_preserves_mean():
    drop = Dropout(0.3)
    x = Tensor(np.linspace(1.0, 3.0, 50))
    draws = stream(0, "dropout-mean")
    mean = np.mean([drop(x, rng=draws).value for _ in range(4000)], axis=0)
    np.testing.assert_allclose(mean, x.value, atol=0.15)


def test_adam_first_step_moves_by_lr():
    p = {"w": np.array([1.0, -1.0, 0.5])}
    g = {"w": np.array([0.3, -2.0, 0.0])}
    state = adam_step(p, g, AdamState(lr=0.01))
    assert state.t == 1
    np.testing.assert_allclose(p["w"], [0.99, -0.99, 0.5], atol=1e-6)


def test_adam_minimizes_quadratic():
    p = {"w": np.array([3.0, -4.0])}
    state = AdamState(lr=0.1)
    for _ in range(1000):
        adam_step(p, {"w": 2 * p["w"]}, state)
    np.testing.assert_allclose(p["w"], 0.0, atol=1e-2)


def test_adam_shape_mismatch():
    with pytest.raises(ShapeError):
        adam_step({"w": np.zeros(3)}, {"w": np.zeros(2)}, AdamState())


def test_streams_are_keyed():
    a = stream(5, "dropout", 0, 1, 2).random(4)
    np.testing.assert_array_equal(a, stream(5, "dropout", 0, 1, 2).random(4))
    assert not np.array_equal(a, stream(5, "dropout", 0, 1, 3).random(4))
    assert not np.array_equal(a, stream(6, "dropout", 0, 1, 2).random(4))
    assert derive_seed(1, "folds", 0) == derive_seed(1, "folds", 0) != derive_seed(1, "folds", 1)
    assert 0 <= derive_seed(1, "folds", 0) < 2 ** 63
