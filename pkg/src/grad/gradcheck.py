"""
Finite-difference verification of tape gradients
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np

from src.exceptions import GradientError
from src.grad.tensor import Tape, Tensor

logger = logging.getLogger(__name__)

LossFn = Callable[[Optional[Tape]], Tensor]


@dataclass
class GradcheckResult:
    max_rel_error: float
    checked: int
    skipped: int
    per_tensor: Dict[str, float] = field(default_factory=dict)

    def __float__(self) -> float:
        return self.max_rel_error


def relative_error(analytic: float, numeric: float, floor: float = 1e-5) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def gradcheck(loss_fn: LossFn,
              tensors: Dict[str, Tensor],
              h: float = 1e-6,
              n_coords: int = 200,
              seed: int = 0,
              kink_tol: float = 1e-4,
              floor: float = 1e-5) -> GradcheckResult:
    """Compare tape gradients with central differences

    ``loss_fn(tape)`` must run the forward pass (recording onto ``tape`` when
    it is not None) and return a scalar loss. Up to ``n_coords`` random
    coordinates of every tensor in ``tensors`` are perturbed by +-h. A
    coordinate whose forward and backward one-sided differences disagree by
    more than ``kink_tol`` (relative) straddles a ReLU or max-pool kink and
    is skipped.

    Returns:
        GradcheckResult with the maximum relative error over checked coordinates
    """
    for name, t in tensors.items():
        if t.dtype != np.float64:
            raise GradientError(f"gradcheck needs float64 tensors, {name} is {t.dtype}")
        t.value = np.ascontiguousarray(t.value)
        t.requires_grad = True
        t.zero_grad()

    tape = Tape()
    loss = loss_fn(tape)
    tape.backward(loss)
    f0 = float(loss.value)
    analytic = {name: (t.grad if t.grad is not None else np.zeros_like(t.value)).copy() for name, t in tensors.items()}

    def evaluate() -> float:
        value = float(loss_fn(None).value)
        if not np.isfinite(value):
            raise GradientError(f"non-finite loss {value} during finite differences")
        return value

    rng = np.random.default_rng(seed)
    result = GradcheckResult(max_rel_error=0.0, checked=0, skipped=0)
    for name, t in tensors.items():
        flat = t.value.reshape(-1)
        coords = rng.choice(flat.size, size=min(flat.size, n_coords), replace=False)
        worst = 0.0
        for i in coords:
            original = flat[i]
            flat[i] = original + h
            f_plus = evaluate()
            flat[i] = original - h
            f_minus = evaluate()
            flat[i] = original
            forward, backward = (f_plus - f0) / h, (f0 - f_minus) / h
            if relative_error(forward, backward, floor) > kink_tol:
                result.skipped += 1
                continue
            numeric = (f_plus - f_minus) / (2 * h)
            worst = max(worst, relative_error(float(analytic[name].reshape(-1)[i]), numeric, floor))
            result.checked += 1
        result.per_tensor[name] = worst
        result.max_rel_error = max(result.max_rel_error, worst)
    if result.skipped:
        logger.debug(f"gradcheck skipped {result.skipped} coordinates at kinks")
    return result
