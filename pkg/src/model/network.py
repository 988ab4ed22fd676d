"""
DeepTokenEEG: depthwise-separable tokenizer, dilated residual encoder, pooled classifier
"""
import logging
from typing import Dict, Optional, Tuple, Union

import numpy as np

from src.exceptions import ShapeError
from src.grad import layers
from src.grad.layers import BatchNorm1d, Conv1d, Dropout, LayerNorm, Linear, Module, ModuleList
from src.grad.tensor import Tape, Tensor
from src.model.config import ModelConfig

logger = logging.getLogger(__name__)


class Tokenizer(Module):
    """Per-electrode temporal conv (no channel mixing) followed by a 1x1 projection to d_model"""

    def __init__(self, config: ModelConfig) -> None:
        super().__init__()
        c = config.n_channels
        self.depthwise = Conv1d(c, c, config.k_token, groups=c)
        self.pointwise = Conv1d(c, config.d_model, 1)

    def __call__(self, x: Tensor, tape: Optional[Tape] = None) -> Tensor:
        if x.value.ndim != 3 or x.shape[1] != self.depthwise.in_channels:
            raise ShapeError(f"wrong channel count: expected (B, {self.depthwise.in_channels}, L), got {x.shape}")
        return self.pointwise(self.depthwise(x, tape), tape)


class ResBlock1D(Module):
    """ReLU(BN(conv(ReLU(BN(dilconv(y))))) + BN(conv1x1(y)))"""

    def __init__(self, d_model: int, bottleneck: int, kernel_size: int, dilation: int) -> None:
        super().__init__()
        self.conv1 = Conv1d(d_model, bottleneck, kernel_size, dilation=dilation)
        self.bn1 = BatchNorm1d(bottleneck)
        self.conv2 = Conv1d(bottleneck, d_model, kernel_size)
        self.bn2 = BatchNorm1d(d_model)
        self.shortcut = Conv1d(d_model, d_model, 1)
        self.shortcut_bn = BatchNorm1d(d_model)

    def __call__(self, y: Tensor, tape: Optional[Tape] = None) -> Tensor:
        h = layers.relu(self.bn1(self.conv1(y, tape), tape), tape)
        h = self.bn2(self.conv2(h, tape), tape)
        s = self.shortcut_bn(self.shortcut(y, tape), tape)
        return layers.relu(layers.add(h, s, tape), tape)


class EncoderStage(Module):
    """Y_{j+1} = ResBlock1D(Y_j) + CrossConv(Y_j)"""

    def __init__(self, config: ModelConfig, dilation: int) -> None:
        super().__init__()
        self.dilation = dilation
        self.resblock = ResBlock1D(config.d_model, config.bottleneck, config.k_res, dilation)
        self.crossconv = Conv1d(config.d_model, config.d_model, 1)

    def __call__(self, y: Tensor, tape: Optional[Tape] = None) -> Tensor:
        return layers.add(self.resblock(y, tape), self.crossconv(y, tape), tape)


class Classifier(Module):
    """concat(avgpool, maxpool) -> dropout -> layer norm -> linear"""

    def __init__(self, config: ModelConfig) -> None:
        super().__init__()
        self.dropout = Dropout(config.dropout)
        self.norm = LayerNorm(2 * config.d_model)
        self.linear = Linear(2 * config.d_model, config.n_classes)

    def pooled(self, y: Tensor, tape: Optional[Tape] = None) -> Tensor:
        avg = layers.adaptive_pool(y, "avg", 1, tape)
        mx = layers.adaptive_pool(y, "max", 1, tape)
        return layers.flatten(layers.concat([avg, mx], axis=1, tape=tape), tape)

    def __call__(self, y: Tensor, tape: Optional[Tape] = None, rng: Optional[np.random.Generator] = None) -> Tensor:
        z = self.dropout(self.pooled(y, tape), tape, rng)
        return self.linear(self.norm(z, tape), tape)


class DeepTokenEEG(Module):
    """Full network mapping z-scored segments (B, 19, L) to class logits (B, n_classes)

    Args:
        config: Architecture hyperparameters
        rng: When given, parameters are drawn from it (uniform +-sqrt(1/fan_in)
            for convs and linears, gamma=1 and beta=0 for norms); otherwise
            they stay zero until ``reset_parameters`` or a checkpoint load
    """

    def __init__(self, config: ModelConfig, rng: Optional[np.random.Generator] = None) -> None:
        super().__init__()
        self.config = config
        self.tokenizer = Tokenizer(config)
        self.encoder = ModuleList(EncoderStage(config, m) for m in config.stage_dilations())
        self.classifier = Classifier(config)
        if rng is not None:
            self.reset_parameters(rng)

    @property
    def n_params(self) -> int:
        return sum(p.size for p in self.parameters())

    def encode(self, x: Tensor, tape: Optional[Tape] = None) -> Tensor:
        y = self.tokenizer(x, tape)
        for stage in self.encoder:
            y = stage(y, tape)
        return y

    def forward(self,
                x: Union[np.ndarray, Tensor],
                tape: Optional[Tape] = None,
                rng: Optional[np.random.Generator] = None) -> Tensor:
        """Logits for a batch; dropout draws from ``rng`` in train mode"""
        if not isinstance(x, Tensor):
            x = Tensor(np.asarray(x, dtype=self.tokenizer.depthwise.weight.dtype))
        return self.classifier(self.encode(x, tape), tape, rng)

    __call__ = forward

    def loss_and_grads(self,
                       x: np.ndarray,
                       labels: np.ndarray,
                       rng: Optional[np.random.Generator] = None) -> Tuple[float, Dict[str, np.ndarray]]:
        """Cross-entropy of one batch and its gradient for every parameter"""
        self.zero_grad()
        tape = Tape()
        loss = layers.cross_entropy(self.forward(x, tape, rng), labels, tape)
        tape.backward(loss)
        grads = {
            name: p.grad if p.grad is not None else np.zeros_like(p.value)
            for name, p in self.named_parameters()
        }
        return float(loss.value), grads
