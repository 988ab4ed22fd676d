"""Reverse-mode gradient engine, layers and the Adam optimizer"""
from src.grad.gradcheck import GradcheckResult, gradcheck
from src.grad.layers import BatchNorm1d, Conv1d, Dropout, LayerNorm, Linear, Module, ModuleList
from src.grad.optim import AdamState, adam_step
from src.grad.rng import derive_seed, stream
from src.grad.tensor import Tape, Tensor

__all__ = [
    "GradcheckResult",
    "gradcheck",
    "BatchNorm1d",
    "Conv1d",
    "Dropout",
    "LayerNorm",
    "Linear",
    "Module",
    "ModuleList",
    "AdamState",
    "adam_step",
    "derive_seed",
    "stream",
    "Tape",
    "Tensor",
]
