"""Filtering, resampling, segmentation and normalization of EEG signals"""
from src.dsp.filters import FilterSpec, band_power, bandpass, rational_ratio, resample
from src.dsp.segmentation import Segment, SegmentBatch, segment, window_count, zscore

__all__ = [
    "FilterSpec",
    "band_power",
    "bandpass",
    "rational_ratio",
    "resample",
    "Segment",
    "SegmentBatch",
    "segment",
    "window_count",
    "zscore",
]
