"""DeepTokenEEG network, accounting, training and checkpoints"""
from src.model.accounting import count_flops, count_params, layer_costs
from src.model.bench import benchmark
from src.model.checkpoint import load_checkpoint, save_checkpoint
from src.model.config import ModelConfig, TrainConfig
from src.model.network import DeepTokenEEG
from src.model.training import TrainResult, predict_segments, predict_subject, predict_subjects, train

__all__ = [
    "benchmark",
    "count_flops",
    "count_params",
    "layer_costs",
    "load_checkpoint",
    "save_checkpoint",
    "ModelConfig",
    "TrainConfig",
    "DeepTokenEEG",
    "TrainResult",
    "predict_segments",
    "predict_subject",
    "predict_subjects",
    "train",
]
