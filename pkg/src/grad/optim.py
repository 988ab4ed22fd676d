"""
Adam optimizer
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Mapping

import numpy as np

from config import settings
from src.exceptions import ShapeError

logger = logging.getLogger(__name__)


@dataclass
class AdamState:
    """First/second moment estimates per parameter name plus the step counter"""
    lr: float = settings.LEARNING_RATE
    beta1: float = settings.ADAM_BETA1
    beta2: float = settings.ADAM_BETA2
    eps: float = settings.ADAM_EPS
    t: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict, repr=False)
    v: Dict[str, np.ndarray] = field(default_factory=dict, repr=False)


def adam_step(params: Mapping[str, np.ndarray], grads: Mapping[str, np.ndarray], state: AdamState) -> AdamState:
    """One bias-corrected Adam update, applied to ``params`` in place

    Parameters without an entry in ``grads`` are treated as having zero
    gradient.
    """
    state.t += 1
    bias1 = 1.0 - state.beta1 ** state.t
    bias2 = 1.0 - state.beta2 ** state.t
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(p)
        elif g.shape != p.shape:
            raise ShapeError(f"{name}: gradient shape {g.shape} does not match parameter {p.shape}")
        m = state.m.setdefault(name, np.zeros_like(p))
        v = state.v.setdefault(name, np.zeros_like(p))
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        m_hat = m / bias1
        v_hat = v / bias2
        p -= (state.lr * m_hat / (np.sqrt(v_hat) + state.eps)).astype(p.dtype, copy=False)
    return state
