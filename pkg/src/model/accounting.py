"""
Analytic parameter and FLOP accounting for DeepTokenEEG

FLOPs are counted for one forward pass of one segment, 2 per multiply-add:
    conv         2 C_out (C_in/g) K L + C_out L (bias)
    batch norm   2 C L (folded scale and shift)
    relu, add    C L
    avg/max pool C L each
    layer norm   5 F
    linear       2 F O + O
Dropout costs nothing at inference.
"""
from dataclasses import dataclass
from typing import List, Optional

from config import settings
from src.model.config import ModelConfig


@dataclass(frozen=True)
class LayerCost:
    name: str
    params: int
    flops: int


def _conv(name: str, c_in: int, c_out: int, k: int, length: int, groups: int = 1) -> LayerCost:
    params = c_out * (c_in // groups) * k + c_out
    flops = 2 * c_out * (c_in // groups) * k * length + c_out * length
    return LayerCost(name, params, flops)


def _bn(name: str, c: int, length: int) -> LayerCost:
    return LayerCost(name, 2 * c, 2 * c * length)


def _elementwise(name: str, c: int, length: int) -> LayerCost:
    return LayerCost(name, 0, c * length)


def layer_costs(config: ModelConfig, seg_len: Optional[int] = None) -> List[LayerCost]:
    """Per-layer parameter and FLOP breakdown in forward order"""
    length = seg_len or config.seg_len
    c, d, b = config.n_channels, config.d_model, config.bottleneck
    costs = [
        _conv("tokenizer.depthwise", c, c, config.k_token, length, groups=c),
        _conv("tokenizer.pointwise", c, d, 1, length),
    ]
    for j, _ in enumerate(config.stage_dilations()):
        p = f"encoder.{j}"
        costs += [
            _conv(f"{p}.resblock.conv1", d, b, config.k_res, length),
            _bn(f"{p}.resblock.bn1", b, length),
            _elementwise(f"{p}.resblock.relu1", b, length),
            _conv(f"{p}.resblock.conv2", b, d, config.k_res, length),
            _bn(f"{p}.resblock.bn2", d, length),
            _conv(f"{p}.resblock.shortcut", d, d, 1, length),
            _bn(f"{p}.resblock.shortcut_bn", d, length),
            _elementwise(f"{p}.resblock.add", d, length),
            _elementwise(f"{p}.resblock.relu2", d, length),
            _conv(f"{p}.crossconv", d, d, 1, length),
            _elementwise(f"{p}.add", d, length),
        ]
    features = 2 * d
    costs += [
        _elementwise("classifier.avgpool", d, length),
        _elementwise("classifier.maxpool", d, length),
        LayerCost("classifier.norm", 2 * features, 5 * features),
        LayerCost("classifier.linear", features * config.n_classes + config.n_classes,
                  2 * features * config.n_classes + config.n_classes),
    ]
    return costs


def count_params(config: ModelConfig) -> int:
    """Trainable parameters; BatchNorm running statistics are not counted"""
    return sum(c.params for c in layer_costs(config))


def count_flops(config: ModelConfig, seg_len: Optional[int] = None, batch_size: int = 1) -> int:
    """Forward-pass FLOPs for ``batch_size`` segments of length ``seg_len``"""
    return batch_size * sum(c.flops for c in layer_costs(config, seg_len))


def flops_summary(config: ModelConfig, seg_len: Optional[int] = None) -> dict:
    per_segment = count_flops(config, seg_len)
    return {
        "per_segment": per_segment,
        "per_batch": per_segment * settings.BENCH_BATCH,
        "gflops_per_segment": per_segment / 1e9,
        "gflops_per_batch": per_segment * settings.BENCH_BATCH / 1e9,
    }
