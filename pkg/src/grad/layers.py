"""
Tape-aware layers and the module container they live in

Modules own their parameters (``Tensor`` attributes) and buffers (arrays
registered with ``register_buffer``); ``named_parameters`` walks them in
definition order with dotted names such as ``encoder.0.resblock.conv1.weight``.
"""
import logging
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from config import settings
from src.exceptions import ShapeError
from src.grad import functional as F
from src.grad.tensor import BackwardFn, Tape, Tensor

logger = logging.getLogger(__name__)


def _apply(tape: Optional[Tape], inputs: Sequence[Optional[Tensor]], value: np.ndarray, backward: BackwardFn) -> Tensor:
    requires_grad = any(t is not None and t.requires_grad for t in inputs)
    out = Tensor(value, requires_grad=requires_grad)
    if tape is not None and requires_grad:
        tape.record(out, inputs, backward)
    return out


# Stateless ops

def relu(x: Tensor, tape: Optional[Tape] = None) -> Tensor:
    y, mask = F.relu_forward(x.value)
    return _apply(tape, (x,), y, lambda g: (F.relu_backward(g, mask),))


def add(a: Tensor, b: Tensor, tape: Optional[Tape] = None) -> Tensor:
    if a.shape != b.shape:
        raise ShapeError(f"cannot add {a.shape} and {b.shape}")
    return _apply(tape, (a, b), a.value + b.value, lambda g: (g, g))


def concat(tensors: Sequence[Tensor], axis: int = 1, tape: Optional[Tape] = None) -> Tensor:
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]
    value = np.concatenate([t.value for t in tensors], axis=axis)
    return _apply(tape, tuple(tensors), value, lambda g: tuple(np.split(g, splits, axis=axis)))


def flatten(x: Tensor, tape: Optional[Tape] = None) -> Tensor:
    shape = x.shape
    return _apply(tape, (x,), x.value.reshape(shape[0], -1), lambda g: (g.reshape(shape),))


def adaptive_pool(x: Tensor, kind: str = "avg", out_len: int = 1, tape: Optional[Tape] = None) -> Tensor:
    y, cache = F.adaptive_pool_forward(x.value, kind, out_len)
    return _apply(tape, (x,), y, lambda g: (F.adaptive_pool_backward(g, cache),))


def cross_entropy(logits: Tensor, labels: np.ndarray, tape: Optional[Tape] = None) -> Tensor:
    loss, grad = F.softmax_cross_entropy(logits.value, labels)
    value = np.asarray(loss, dtype=logits.dtype)
    return _apply(tape, (logits,), value, lambda g: (grad * g,))


# Modules

class Module:
    """Container of parameters, buffers and child modules"""

    def __init__(self) -> None:
        object.__setattr__(self, "_params", {})
        object.__setattr__(self, "_buffers", {})
        object.__setattr__(self, "_modules", {})
        object.__setattr__(self, "training", True)

    def __setattr__(self, name: str, value) -> None:
        if isinstance(value, Tensor):
            self._params[name] = value
        elif isinstance(value, Module):
            self._modules[name] = value
        elif name in self._buffers:
            self._buffers[name] = value
        object.__setattr__(self, name, value)

    def register_buffer(self, name: str, value: np.ndarray) -> None:
        self._buffers[name] = value
        object.__setattr__(self, name, value)

    def children(self) -> Iterator[Tuple[str, "Module"]]:
        yield from self._modules.items()

    def modules(self) -> Iterator["Module"]:
        yield self
        for _, child in self.children():
            yield from child.modules()

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Tensor]]:
        for name, param in self._params.items():
            yield prefix + name, param
        for name, child in self.children():
            yield from child.named_parameters(f"{prefix}{name}.")

    def named_buffers(self, prefix: str = "") -> Iterator[Tuple[str, np.ndarray]]:
        for name, buf in self._buffers.items():
            yield prefix + name, buf
        for name, child in self.children():
            yield from child.named_buffers(f"{prefix}{name}.")

    def parameters(self) -> List[Tensor]:
        return [p for _, p in self.named_parameters()]

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    def train(self, mode: bool = True) -> "Module":
        for m in self.modules():
            object.__setattr__(m, "training", mode)
        return self

    def eval(self) -> "Module":
        return self.train(False)

    def astype(self, dtype) -> "Module":
        """Cast every parameter and buffer in place"""
        for m in self.modules():
            for p in m._params.values():
                p.value = p.value.astype(dtype)
                p.grad = None
            for name, buf in list(m._buffers.items()):
                setattr(m, name, buf.astype(dtype))
        return self

    def reset_parameters(self, rng: np.random.Generator) -> None:
        for _, child in self.children():
            child.reset_parameters(rng)

    def state_dict(self) -> Dict[str, np.ndarray]:
        """Parameters followed by buffers, by dotted name"""
        state = {name: p.value for name, p in self.named_parameters()}
        state.update(self.named_buffers())
        return state

    def load_state_dict(self, state: Dict[str, np.ndarray]) -> None:
        expected = self.state_dict()
        missing = sorted(set(expected) - set(state))
        unexpected = sorted(set(state) - set(expected))
        if missing or unexpected:
            raise ShapeError(f"state mismatch: missing {missing}, unexpected {unexpected}")
        for name, value in state.items():
            if np.shape(value) != expected[name].shape:
                raise ShapeError(f"{name}: expected shape {expected[name].shape}, got {np.shape(value)}")
        self._assign(state, "")

    def _assign(self, state: Dict[str, np.ndarray], prefix: str) -> None:
        for name, p in self._params.items():
            p.value = np.array(state[prefix + name], dtype=p.value.dtype)
            p.grad = None
        for name, buf in list(self._buffers.items()):
            setattr(self, name, np.array(state[prefix + name], dtype=buf.dtype))
        for name, child in self.children():
            child._assign(state, f"{prefix}{name}.")


class ModuleList(Module):
    """Ordered children named 0, 1, 2, ..."""

    def __init__(self, modules: Sequence[Module] = ()) -> None:
        super().__init__()
        self._items: List[Module] = []
        for m in modules:
            self.append(m)

    def append(self, module: Module) -> None:
        self._modules[str(len(self._items))] = module
        self._items.append(module)

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self) -> Iterator[Module]:
        return iter(self._items)

    def __getitem__(self, index: int) -> Module:
        return self._items[index]


class Conv1d(Module):
    """'Same'-padded 1-D convolution; groups == in_channels gives a depthwise conv"""

    def __init__(self,
                 in_channels: int,
                 out_channels: int,
                 kernel_size: int,
                 dilation: int = 1,
                 groups: int = 1,
                 bias: bool = True) -> None:
        super().__init__()
        if in_channels % groups or out_channels % groups:
            raise ShapeError(f"channels {in_channels} -> {out_channels} not divisible by groups={groups}")
        if kernel_size % 2 == 0:
            raise ShapeError(f"kernel size must be odd, got {kernel_size}")
        self.in_channels, self.out_channels = in_channels, out_channels
        self.kernel_size, self.dilation, self.groups = kernel_size, dilation, groups
        self.weight = Tensor(np.zeros((out_channels, in_channels // groups, kernel_size)), requires_grad=True)
        if bias:
            self.bias = Tensor(np.zeros(out_channels), requires_grad=True)
        else:
            object.__setattr__(self, "bias", None)

    @property
    def fan_in(self) -> int:
        return self.in_channels // self.groups * self.kernel_size

    def reset_parameters(self, rng: np.random.Generator) -> None:
        bound = np.sqrt(1.0 / self.fan_in)
        dtype = self.weight.dtype
        self.weight.value = rng.uniform(-bound, bound, self.weight.shape).astype(dtype)
        if self.bias is not None:
            self.bias.value = rng.uniform(-bound, bound, self.bias.shape).astype(dtype)

    def __call__(self, x: Tensor, tape: Optional[Tape] = None) -> Tensor:
        b = self.bias.value if self.bias is not None else None
        y, cache = F.conv1d_forward(x.value, self.weight.value, b, self.dilation, self.groups)
        return _apply(tape, (x, self.weight, self.bias), y, lambda g: F.conv1d_backward(g, cache))


class BatchNorm1d(Module):
    def __init__(self,
                 num_features: int,
                 momentum: float = settings.BN_MOMENTUM,
                 eps: float = settings.NORM_EPS) -> None:
        super().__init__()
        self.num_features, self.momentum, self.eps = num_features, momentum, eps
        self.weight = Tensor(np.ones(num_features), requires_grad=True)
        self.bias = Tensor(np.zeros(num_features), requires_grad=True)
        self.register_buffer("running_mean", np.zeros(num_features))
        self.register_buffer("running_var", np.ones(num_features))

    def reset_parameters(self, rng: np.random.Generator) -> None:
        dtype = self.weight.dtype
        self.weight.value = np.ones(self.num_features, dtype=dtype)
        self.bias.value = np.zeros(self.num_features, dtype=dtype)
        self.running_mean = np.zeros(self.num_features, dtype=dtype)
        self.running_var = np.ones(self.num_features, dtype=dtype)

    def __call__(self, x: Tensor, tape: Optional[Tape] = None) -> Tensor:
        y, cache = F.batchnorm1d_forward(
            x.value, self.weight.value, self.bias.value,
            self.running_mean, self.running_var,
            self.training, self.momentum, self.eps,
        )
        return _apply(tape, (x, self.weight, self.bias), y, lambda g: F.batchnorm1d_backward(g, cache))


class LayerNorm(Module):
    def __init__(self, num_features: int, eps: float = settings.NORM_EPS) -> None:
        super().__init__()
        self.num_features, self.eps = num_features, eps
        self.weight = Tensor(np.ones(num_features), requires_grad=True)
        self.bias = Tensor(np.zeros(num_features), requires_grad=True)

    def reset_parameters(self, rng: np.random.Generator) -> None:
        self.weight.value = np.ones(self.num_features, dtype=self.weight.dtype)
        self.bias.value = np.zeros(self.num_features, dtype=self.bias.dtype)

    def __call__(self, x: Tensor, tape: Optional[Tape] = None) -> Tensor:
        y, cache = F.layernorm_forward(x.value, self.weight.value, self.bias.value, self.eps)
        return _apply(tape, (x, self.weight, self.bias), y, lambda g: F.layernorm_backward(g, cache))


class Linear(Module):
    """y = x W + b with W stored as (in_features, out_features)"""

    def __init__(self, in_features: int, out_features: int, bias: bool = True) -> None:
        super().__init__()
        self.in_features, self.out_features = in_features, out_features
        self.weight = Tensor(np.zeros((in_features, out_features)), requires_grad=True)
        if bias:
            self.bias = Tensor(np.zeros(out_features), requires_grad=True)
        else:
            object.__setattr__(self, "bias", None)

    def reset_parameters(self, rng: np.random.Generator) -> None:
        bound = np.sqrt(1.0 / self.in_features)
        dtype = self.weight.dtype
        self.weight.value = rng.uniform(-bound, bound, self.weight.shape).astype(dtype)
        if self.bias is not None:
            self.bias.value = rng.uniform(-bound, bound, self.bias.shape).astype(dtype)

    def __call__(self, x: Tensor, tape: Optional[Tape] = None) -> Tensor:
        b = self.bias.value if self.bias is not None else None
        y, cache = F.linear_forward(x.value, self.weight.value, b)
        return _apply(tape, (x, self.weight, self.bias), y, lambda g: F.linear_backward(g, cache))


class Dropout(Module):
    def __init__(self, p: float = settings.DROPOUT) -> None:
        super().__init__()
        if not 0 <= p < 1:
            raise ValueError(f"dropout probability must be in [0, 1), got {p}")
        self.p = p

    def __call__(self, x: Tensor, tape: Optional[Tape] = None, rng: Optional[np.random.Generator] = None) -> Tensor:
        y, mask = F.dropout_forward(x.value, self.p, self.training, rng)
        if mask is None:
            return x
        return _apply(tape, (x,), y, lambda g: (F.dropout_backward(g, mask),))
