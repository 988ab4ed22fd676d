"""
Tensors and the gradient tape
"""
import logging
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from src.exceptions import GradientError, ShapeError

logger = logging.getLogger(__name__)

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


class Tensor:
    """Array value with an optional gradient accumulator"""
    __slots__ = ("value", "grad", "requires_grad", "name")

    def __init__(self, value, requires_grad: bool = False, name: str = "") -> None:
        self.value = np.asarray(value)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.name = name

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    @property
    def dtype(self) -> np.dtype:
        return self.value.dtype

    @property
    def size(self) -> int:
        return self.value.size

    def zero_grad(self) -> None:
        self.grad = None

    def accumulate(self, grad: np.ndarray) -> None:
        if grad.shape != self.value.shape:
            raise ShapeError(f"gradient shape {grad.shape} does not match {self.name or 'tensor'} {self.value.shape}")
        if self.grad is None:
            self.grad = np.array(grad, dtype=self.value.dtype, copy=True)
        else:
            self.grad += grad

    def __repr__(self) -> str:
        label = f"{self.name}, " if self.name else ""
        return f"Tensor({label}shape={self.shape}, dtype={self.dtype}, requires_grad={self.requires_grad})"


class Tape:
    """Records operations in forward order and replays them backwards

    One tape covers one forward pass (one batch). Passing ``tape=None`` to
    the layer functions runs them without recording.
    """

    def __init__(self) -> None:
        self._nodes: List[Tuple[Tensor, Tuple[Optional[Tensor], ...], BackwardFn]] = []

    def __len__(self) -> int:
        return len(self._nodes)

    def record(self, output: Tensor, inputs: Sequence[Optional[Tensor]], backward: BackwardFn) -> None:
        self._nodes.append((output, tuple(inputs), backward))

    def backward(self, loss: Tensor, grad: Optional[np.ndarray] = None) -> None:
        """Propagate d(loss) back to every recorded input that requires a gradient"""
        if grad is None:
            if loss.size != 1:
                raise ShapeError(f"backward from a non-scalar of shape {loss.shape} needs an explicit grad")
            grad = np.ones_like(loss.value)
        if not np.all(np.isfinite(loss.value)):
            raise GradientError(f"non-finite loss {loss.value}")
        loss.accumulate(grad)
        for output, inputs, backward in reversed(self._nodes):
            if output.grad is None:
                continue
            grads = backward(output.grad)
            for tensor, g in zip(inputs, grads):
                if tensor is not None and g is not None and tensor.requires_grad:
                    tensor.accumulate(g)
        self._nodes.clear()
