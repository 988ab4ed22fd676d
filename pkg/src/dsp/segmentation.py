"""
Fixed-length windowing and per-segment z-score normalization
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from config import settings
from src.eegio.recording import Label
from src.exceptions import SignalError

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class Segment:
    """One normalized window of a subject's recording in one band"""
    data: np.ndarray = field(repr=False)
    subject_id: str
    label: Label
    band: str
    index: int


@dataclass(eq=False)
class SegmentBatch:
    """All windows of one subject in one band, shape (K, C, L)"""
    data: np.ndarray = field(repr=False)
    subject_id: str
    label: Label
    band: str

    def __len__(self) -> int:
        return self.data.shape[0]

    def __iter__(self):
        for k in range(len(self)):
            yield Segment(self.data[k], self.subject_id, self.label, self.band, k)

    @property
    def labels(self) -> np.ndarray:
        return np.full(len(self), int(self.label), dtype=np.int64)


def window_count(n_samples: int, length: int = settings.SEGMENT_LENGTH, overlap: float = settings.SEGMENT_OVERLAP) -> int:
    step = window_step(length, overlap)
    if n_samples < length:
        return 0
    return (n_samples - length) // step + 1


def window_step(length: int, overlap: float) -> int:
    if not 0 <= overlap < 1:
        raise SignalError(f"overlap must be in [0, 1), got {overlap}")
    step = int(round(length * (1 - overlap)))
    if step < 1:
        raise SignalError(f"overlap {overlap} leaves no step for length {length}")
    return step


def segment(x: np.ndarray, length: int = settings.SEGMENT_LENGTH, overlap: float = settings.SEGMENT_OVERLAP) -> np.ndarray:
    """Cut the last axis into windows starting at k*step

    Trailing samples that do not fill a window are dropped.

    Returns:
        Array of shape (K, ..., length)
    """
    x = np.asarray(x)
    if x.shape[-1] < length:
        raise SignalError(f"signal shorter than L: {x.shape[-1]} < {length}")
    step = window_step(length, overlap)
    windows = sliding_window_view(x, length, axis=-1)[..., ::step, :]
    # (..., K, L) -> (K, ..., L)
    return np.ascontiguousarray(np.moveaxis(windows, -2, 0))


def zscore(seg: np.ndarray, flat_std: float = settings.FLAT_STD) -> np.ndarray:
    """Standardize each row (last axis) to zero mean and unit population std

    Rows whose std is below ``flat_std`` become all zeros.
    """
    seg = np.asarray(seg, dtype=np.float64)
    if np.isnan(seg).any():
        raise SignalError("NaN in segment")
    mean = seg.mean(axis=-1, keepdims=True)
    centered = seg - mean
    std = np.sqrt(np.mean(centered ** 2, axis=-1, keepdims=True))
    flat = std < flat_std
    out = centered / np.where(flat, 1.0, std)
    return np.where(flat, 0.0, out)
