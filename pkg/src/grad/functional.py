"""
Forward/backward pairs for the operators the network is built from

Every ``*_forward`` returns ``(output, cache)`` and the matching
``*_backward`` maps ``(grad_output, cache)`` to the gradients of its inputs.
Arrays are (batch, channels, time) for the temporal ops and (batch, features)
for the vector ops. Nothing here keeps state between calls apart from the
BatchNorm running statistics, which are updated in place in train mode.
"""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from config import settings
from src.exceptions import ShapeError


# conv1d

@dataclass
class ConvCache:
    cols: np.ndarray
    w: np.ndarray
    x_shape: Tuple[int, int, int]
    dilation: int
    groups: int
    pad: int
    has_bias: bool


def _check_conv(x: np.ndarray, w: np.ndarray, b: Optional[np.ndarray], dilation: int, groups: int) -> None:
    if x.ndim != 3:
        raise ShapeError(f"conv1d input must be (B, C, L), got {x.shape}")
    if w.ndim != 3:
        raise ShapeError(f"conv1d weight must be (C_out, C_in/groups, K), got {w.shape}")
    c_out, c_in_g, k = w.shape
    if groups < 1 or x.shape[1] % groups or c_out % groups:
        raise ShapeError(f"channels {x.shape[1]} -> {c_out} not divisible by groups={groups}")
    if x.shape[1] // groups != c_in_g:
        raise ShapeError(f"weight expects {c_in_g * groups} input channels, got {x.shape[1]}")
    if k % 2 == 0:
        raise ShapeError(f"kernel size must be odd, got {k}")
    if dilation < 1:
        raise ShapeError(f"dilation must be >= 1, got {dilation}")
    if b is not None and b.shape != (c_out,):
        raise ShapeError(f"bias must be ({c_out},), got {b.shape}")


def conv1d_forward(x: np.ndarray,
                   w: np.ndarray,
                   b: Optional[np.ndarray] = None,
                   dilation: int = 1,
                   groups: int = 1) -> Tuple[np.ndarray, ConvCache]:
    """'Same'-padded dilated grouped 1-D convolution (cross-correlation)

    y[b, o, t] = bias[o] + sum_{c in group(o)} sum_k w[o, c, k] x[b, c, t + d (k - (K-1)/2)]
    """
    _check_conv(x, w, b, dilation, groups)
    batch, c_in, length = x.shape
    c_out, c_in_g, k = w.shape
    pad = dilation * (k - 1) // 2
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad)))
    # (B, C_in, K, L)
    cols = np.stack([xp[:, :, j * dilation: j * dilation + length] for j in range(k)], axis=2)
    cols_g = cols.reshape(batch, groups, c_in_g * k, length)
    w_g = w.reshape(groups, c_out // groups, c_in_g * k)
    y = np.matmul(w_g[None], cols_g).reshape(batch, c_out, length)
    if b is not None:
        y = y + b[None, :, None]
    return y, ConvCache(cols, w, x.shape, dilation, groups, pad, b is not None)


def conv1d_backward(grad_out: np.ndarray, cache: ConvCache) -> Tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]:
    batch, c_in, length = cache.x_shape
    c_out, c_in_g, k = cache.w.shape
    groups = cache.groups
    if grad_out.shape != (batch, c_out, length):
        raise ShapeError(f"conv1d grad must be {(batch, c_out, length)}, got {grad_out.shape}")
    gy = grad_out.reshape(batch, groups, c_out // groups, length)
    cols_g = cache.cols.reshape(batch, groups, c_in_g * k, length)
    w_g = cache.w.reshape(groups, c_out // groups, c_in_g * k)

    grad_w = np.matmul(gy, cols_g.transpose(0, 1, 3, 2)).sum(axis=0).reshape(cache.w.shape)
    grad_cols = np.matmul(w_g.transpose(0, 2, 1)[None], gy).reshape(batch, c_in, k, length)

    grad_xp = np.zeros((batch, c_in, length + 2 * cache.pad), dtype=grad_out.dtype)
    for j in range(k):
        start = j * cache.dilation
        grad_xp[:, :, start: start + length] += grad_cols[:, :, j, :]
    grad_x = grad_xp[:, :, cache.pad: cache.pad + length]
    grad_b = grad_out.sum(axis=(0, 2)) if cache.has_bias else None
    return grad_x, grad_w, grad_b


# batch norm

@dataclass
class BatchNormCache:
    xhat: np.ndarray
    gamma: np.ndarray
    inv_std: np.ndarray
    training: bool


def batchnorm1d_forward(x: np.ndarray,
                        gamma: np.ndarray,
                        beta: np.ndarray,
                        running_mean: np.ndarray,
                        running_var: np.ndarray,
                        training: bool,
                        momentum: float = settings.BN_MOMENTUM,
                        eps: float = settings.NORM_EPS) -> Tuple[np.ndarray, BatchNormCache]:
    """Per-channel normalization over (batch, time)

    Train mode normalizes with the biased batch variance and folds the
    unbiased one into ``running_var`` in place; eval mode uses the running
    statistics.
    """
    if x.ndim != 3 or x.shape[1] != gamma.shape[0]:
        raise ShapeError(f"batchnorm1d expects (B, {gamma.shape[0]}, L), got {x.shape}")
    if training:
        n = x.shape[0] * x.shape[2]
        if n <= 1:
            raise ShapeError("batchnorm1d in train mode needs more than one value per channel")
        mean = x.mean(axis=(0, 2))
        var = x.var(axis=(0, 2))
        running_mean *= 1 - momentum
        running_mean += momentum * mean
        running_var *= 1 - momentum
        running_var += momentum * var * n / (n - 1)
    else:
        mean, var = running_mean, running_var
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x - mean[None, :, None]) * inv_std[None, :, None]
    y = gamma[None, :, None] * xhat + beta[None, :, None]
    return y, BatchNormCache(xhat, gamma, inv_std, training)


def batchnorm1d_backward(grad_out: np.ndarray, cache: BatchNormCache) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    grad_gamma = (grad_out * cache.xhat).sum(axis=(0, 2))
    grad_beta = grad_out.sum(axis=(0, 2))
    g_xhat = grad_out * cache.gamma[None, :, None]
    inv_std = cache.inv_std[None, :, None]
    if not cache.training:
        return g_xhat * inv_std, grad_gamma, grad_beta
    n = grad_out.shape[0] * grad_out.shape[2]
    grad_x = inv_std / n * (
        n * g_xhat
        - g_xhat.sum(axis=(0, 2), keepdims=True)
        - cache.xhat * (g_xhat * cache.xhat).sum(axis=(0, 2), keepdims=True)
    )
    return grad_x, grad_gamma, grad_beta


# relu

def relu_forward(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    mask = x > 0
    return np.where(mask, x, 0.0).astype(x.dtype, copy=False), mask


def relu_backward(grad_out: np.ndarray, mask: np.ndarray) -> np.ndarray:
    return grad_out * mask


# adaptive pooling

@dataclass
class PoolCache:
    kind: str
    x_shape: Tuple[int, ...]
    bins: Tuple[Tuple[int, int], ...]
    argmax: Optional[np.ndarray]


def _pool_bins(length: int, out_len: int) -> Tuple[Tuple[int, int], ...]:
    return tuple(
        (i * length // out_len, -(-(i + 1) * length // out_len))
        for i in range(out_len)
    )


def adaptive_pool_forward(x: np.ndarray, kind: str = "avg", out_len: int = 1) -> Tuple[np.ndarray, PoolCache]:
    """Adaptive average or max pooling over the time axis

    Bin i covers [floor(i L / out_len), ceil((i + 1) L / out_len)). Max
    pooling keeps the first index of ties.
    """
    if kind not in ("avg", "max"):
        raise ShapeError(f"pool kind must be 'avg' or 'max', got {kind!r}")
    if x.ndim != 3 or x.shape[-1] == 0:
        raise ShapeError(f"adaptive_pool needs a non-empty temporal axis, got {x.shape}")
    if out_len < 1:
        raise ShapeError(f"out_len must be >= 1, got {out_len}")
    bins = _pool_bins(x.shape[-1], out_len)
    if kind == "avg":
        y = np.stack([x[..., s:e].mean(axis=-1) for s, e in bins], axis=-1)
        return y, PoolCache(kind, x.shape, bins, None)
    argmax = np.stack([s + np.argmax(x[..., s:e], axis=-1) for s, e in bins], axis=-1)
    y = np.take_along_axis(x, argmax, axis=-1)
    return y, PoolCache(kind, x.shape, bins, argmax)


def adaptive_pool_backward(grad_out: np.ndarray, cache: PoolCache) -> np.ndarray:
    grad_x = np.zeros(cache.x_shape, dtype=grad_out.dtype)
    if cache.kind == "avg":
        for i, (s, e) in enumerate(cache.bins):
            grad_x[..., s:e] += grad_out[..., i:i + 1] / (e - s)
        return grad_x
    # Adaptive bins may overlap, so accumulate bin by bin
    for i in range(len(cache.bins)):
        idx = cache.argmax[..., i:i + 1]
        current = np.take_along_axis(grad_x, idx, axis=-1)
        np.put_along_axis(grad_x, idx, current + grad_out[..., i:i + 1], axis=-1)
    return grad_x


# layer norm

@dataclass
class LayerNormCache:
    xhat: np.ndarray
    gamma: np.ndarray
    inv_std: np.ndarray


def layernorm_forward(x: np.ndarray,
                      gamma: np.ndarray,
                      beta: np.ndarray,
                      eps: float = settings.NORM_EPS) -> Tuple[np.ndarray, LayerNormCache]:
    """Normalize each row over its features, then scale and shift"""
    if x.ndim != 2 or x.shape[1] != gamma.shape[0]:
        raise ShapeError(f"layernorm expects (B, {gamma.shape[0]}), got {x.shape}")
    if x.shape[1] < 2:
        raise ShapeError("layernorm needs at least two features")
    mean = x.mean(axis=1, keepdims=True)
    var = x.var(axis=1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x - mean) * inv_std
    return gamma * xhat + beta, LayerNormCache(xhat, gamma, inv_std)


def layernorm_backward(grad_out: np.ndarray, cache: LayerNormCache) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    grad_gamma = (grad_out * cache.xhat).sum(axis=0)
    grad_beta = grad_out.sum(axis=0)
    g_xhat = grad_out * cache.gamma
    n = grad_out.shape[1]
    grad_x = cache.inv_std / n * (
        n * g_xhat
        - g_xhat.sum(axis=1, keepdims=True)
        - cache.xhat * (g_xhat * cache.xhat).sum(axis=1, keepdims=True)
    )
    return grad_x, grad_gamma, grad_beta


# linear

def linear_forward(x: np.ndarray, w: np.ndarray, b: Optional[np.ndarray] = None) -> Tuple[np.ndarray, tuple]:
    """y = x W + b with W of shape (in_features, out_features)"""
    if x.ndim != 2 or w.ndim != 2 or x.shape[1] != w.shape[0]:
        raise ShapeError(f"linear cannot multiply {x.shape} by {w.shape}")
    if b is not None and b.shape != (w.shape[1],):
        raise ShapeError(f"bias must be ({w.shape[1]},), got {b.shape}")
    y = x @ w
    if b is not None:
        y = y + b
    return y, (x, w, b is not None)


def linear_backward(grad_out: np.ndarray, cache: tuple) -> Tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]:
    x, w, has_bias = cache
    grad_b = grad_out.sum(axis=0) if has_bias else None
    return grad_out @ w.T, x.T @ grad_out, grad_b


# dropout

def dropout_forward(x: np.ndarray,
                    p: float,
                    training: bool,
                    rng: Optional[np.random.Generator] = None) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Inverted dropout; identity in eval mode or when p == 0"""
    if not 0 <= p < 1:
        raise ValueError(f"dropout probability must be in [0, 1), got {p}")
    if not training or p == 0:
        return x, None
    if rng is None:
        raise ValueError("dropout in train mode needs a random generator")
    mask = (rng.random(x.shape) >= p).astype(x.dtype) / x.dtype.type(1 - p)
    return x * mask, mask


def dropout_backward(grad_out: np.ndarray, mask: Optional[np.ndarray]) -> np.ndarray:
    return grad_out if mask is None else grad_out * mask


# loss

def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray) -> Tuple[float, np.ndarray]:
    """Mean negative log-likelihood of ``labels`` and its gradient (softmax - onehot) / B"""
    labels = np.asarray(labels)
    if logits.ndim != 2 or labels.shape != (logits.shape[0],):
        raise ShapeError(f"logits {logits.shape} and labels {labels.shape} do not match")
    if not np.issubdtype(labels.dtype, np.integer) or labels.min(initial=0) < 0 or labels.max(initial=0) >= logits.shape[1]:
        raise ShapeError(f"invalid label: expected integers in [0, {logits.shape[1]})")
    batch = logits.shape[0]
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1))
    picked = shifted[np.arange(batch), labels]
    loss = float(np.mean(log_z - picked))
    grad = softmax(logits)
    grad[np.arange(batch), labels] -= 1
    return loss, grad / batch
