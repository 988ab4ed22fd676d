"""
Mini-batch training and segment/subject prediction
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import settings
from src.eegio.recording import Label
from src.exceptions import GradientError, ShapeError, TrainingError
from src.grad.functional import softmax
from src.grad.optim import AdamState, adam_step
from src.grad.rng import StreamKey, stream
from src.model.config import ModelConfig, TrainConfig
from src.model.network import DeepTokenEEG

logger = logging.getLogger(__name__)

ProgressCallback = Callable[[str, dict], None]


@dataclass
class TrainResult:
    model: DeepTokenEEG
    history: List[float] = field(default_factory=list)


def _check_segments(x: np.ndarray, config: ModelConfig) -> None:
    if x.ndim != 3 or x.shape[1] != config.n_channels:
        raise ShapeError(f"segments must be (N, {config.n_channels}, L), got {x.shape}")


def init_model(config: ModelConfig, seed: int, stream_id: Sequence[StreamKey] = (), dtype: str = "float64") -> DeepTokenEEG:
    """Freshly initialized network for the given seed and stream id"""
    model = DeepTokenEEG(config, rng=stream(seed, "init", *stream_id))
    return model.astype(dtype)


def train(x: np.ndarray,
          y: np.ndarray,
          model_config: Optional[ModelConfig] = None,
          train_config: Optional[TrainConfig] = None,
          seed: int = settings.SEED,
          stream_id: Sequence[StreamKey] = (),
          progress_callback: Optional[ProgressCallback] = None) -> TrainResult:
    """Fit a DeepTokenEEG on labelled segments with Adam and cross-entropy

    Each epoch visits the segments in a fresh permutation drawn from the
    ("shuffle", *stream_id, epoch) stream; dropout masks come from
    ("dropout", *stream_id, epoch, batch), so a run is fully determined by
    ``seed`` and ``stream_id``.

    Args:
        x: Segments of shape (N, channels, L)
        y: Integer labels of shape (N,)
        model_config: Architecture; defaults to the standard configuration
        train_config: Schedule; ``epochs=0`` returns the initialized model
        seed: Master seed
        stream_id: Extra stream keys, e.g. (repeat, fold)
        progress_callback: Called as ``callback("epoch_complete", info)``

    Returns:
        TrainResult with the model (in eval mode) and per-epoch mean loss
    """
    model_config = model_config or ModelConfig()
    train_config = train_config or TrainConfig()
    x = np.asarray(x)
    y = np.asarray(y, dtype=np.int64)
    _check_segments(x, model_config)
    if len(x) == 0:
        raise TrainingError("no training segments")
    if len(y) != len(x):
        raise ShapeError(f"{len(x)} segments but {len(y)} labels")

    dtype = np.dtype(train_config.dtype)
    x = x.astype(dtype, copy=False)
    model = init_model(model_config, seed, stream_id, train_config.dtype).train()
    params = {name: p.value for name, p in model.named_parameters()}
    state = AdamState(lr=train_config.lr, beta1=train_config.beta1, beta2=train_config.beta2, eps=train_config.eps)

    history: List[float] = []
    n = len(x)
    for epoch in range(train_config.epochs):
        order = stream(seed, "shuffle", *stream_id, epoch).permutation(n)
        total = 0.0
        for batch, start in enumerate(range(0, n, train_config.batch_size)):
            idx = order[start: start + train_config.batch_size]
            rng = stream(seed, "dropout", *stream_id, epoch, batch)
            try:
                loss, grads = model.loss_and_grads(x[idx], y[idx], rng)
            except GradientError as e:
                raise TrainingError(f"epoch {epoch + 1}, batch {batch}: {e}") from e
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite loss {loss} at epoch {epoch + 1}, batch {batch}")
            adam_step(params, grads, state)
            total += loss * len(idx)
        history.append(total / n)
        logger.debug(f"epoch {epoch + 1}/{train_config.epochs}: loss {history[-1]:.4f}")
        if progress_callback:
            progress_callback("epoch_complete", {
                "epoch": epoch + 1,
                "epochs": train_config.epochs,
                "loss": history[-1],
            })

    if history:
        logger.info(f"Trained {train_config.epochs} epochs on {n} segments, final loss {history[-1]:.4f}")
    model.eval()
    return TrainResult(model=model, history=history)


def predict_segments(model: DeepTokenEEG,
                     x: np.ndarray,
                     batch_size: int = settings.BENCH_BATCH) -> Tuple[np.ndarray, np.ndarray]:
    """Class probabilities (N, n_classes) and argmax labels (N,) in eval mode"""
    model.eval()
    x = np.asarray(x)
    _check_segments(x, model.config)
    if len(x) == 0:
        return np.zeros((0, model.config.n_classes)), np.zeros(0, dtype=np.int64)
    probs = np.concatenate([
        softmax(model.forward(x[start: start + batch_size]).value)
        for start in range(0, len(x), batch_size)
    ])
    return probs, probs.argmax(axis=1).astype(np.int64)


def predict_subject(segment_labels: Sequence[int]) -> Label:
    """Majority vote over a subject's segments; ties go to AD"""
    labels = np.asarray(segment_labels, dtype=np.int64)
    if labels.size == 0:
        raise ValueError("cannot vote over an empty segment list")
    ad_votes = int(np.count_nonzero(labels == Label.AD))
    return Label.AD if 2 * ad_votes >= labels.size else Label.HC


def predict_subjects(subject_ids: Sequence[str], segment_labels: Sequence[int]) -> Dict[str, Label]:
    """Per-subject majority vote, keyed by subject id in first-seen order"""
    votes: Dict[str, List[int]] = {}
    for sid, label in zip(subject_ids, segment_labels):
        votes.setdefault(sid, []).append(int(label))
    return {sid: predict_subject(v) for sid, v in votes.items()}
