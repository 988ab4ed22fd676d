"""
Recording -> normalized segments

harmonize -> band-pass -> resample to 128 Hz -> truncate to a multiple of
2**levels -> band extraction (skipped for the full band) -> windowing ->
per-segment z-score. Nothing is learned from the data, so a dataset can be
preprocessed once and shared by every fold.
"""
import logging
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from config import settings
from src.dsp.filters import FilterSpec, bandpass, resample
from src.dsp.segmentation import SegmentBatch, segment, zscore
from src.eegio.manifest import Manifest
from src.eegio.recording import Recording
from src.exceptions import SignalError
from src.montage.harmonize import harmonize
from src.montage.positions import PositionTable, builtin_positions
from src.wavelet.bands import Band, select_band

logger = logging.getLogger(__name__)


def preprocess_recording(rec: Recording,
                         band: Union[str, Band] = Band.FULL,
                         table: Optional[PositionTable] = None,
                         filter_spec: Optional[FilterSpec] = None) -> SegmentBatch:
    """Turn one recording into z-scored (K, 19, L) segments of one band

    Raises:
        SignalError: The recording yields no full window at 128 Hz
        MontageError: Channels cannot be mapped onto the target montage
    """
    band = Band.parse(band)
    harmonized = harmonize(rec, table=table)
    x = bandpass(harmonized.data, harmonized.fs, filter_spec or FilterSpec())
    x = resample(x, harmonized.fs, settings.TARGET_FS)

    block = 2 ** settings.SWT_LEVELS
    n = x.shape[-1] - x.shape[-1] % block
    if n < settings.SEGMENT_LENGTH:
        raise SignalError(
            f"{rec.subject_id}: recording too short ({x.shape[-1]} samples at "
            f"{settings.TARGET_FS:g} Hz, need {settings.SEGMENT_LENGTH})"
        )
    x = select_band(x[:, :n], band, settings.TARGET_FS)
    segments = zscore(segment(x, settings.SEGMENT_LENGTH, settings.SEGMENT_OVERLAP))
    logger.debug(f"{rec.subject_id}: {len(segments)} {band.value} segments")
    return SegmentBatch(data=segments, subject_id=rec.subject_id, label=rec.label, band=band.value)


def preprocess_manifest(manifest: Manifest,
                        band: Union[str, Band] = Band.FULL,
                        table: Optional[PositionTable] = None,
                        filter_spec: Optional[FilterSpec] = None,
                        progress_callback: Optional[Callable[[str, dict], None]] = None
                        ) -> Tuple[List[SegmentBatch], List[str]]:
    """Preprocess every recording of a manifest

    Recordings too short for one window are skipped with a warning.

    Returns:
        The per-subject batches in manifest order and the skipped subject ids
    """
    band = Band.parse(band)
    table = table or builtin_positions()
    batches: List[SegmentBatch] = []
    skipped: List[str] = []
    for i, entry in enumerate(manifest):
        rec = manifest.load(entry)
        try:
            batches.append(preprocess_recording(rec, band, table, filter_spec))
        except SignalError as e:
            logger.warning(f"Skipping {entry.subject_id}: {e}")
            skipped.append(entry.subject_id)
        if progress_callback:
            progress_callback("recording_complete", {"index": i + 1, "total": len(manifest), "subject_id": entry.subject_id})
    logger.info(f"Preprocessed {len(batches)} subjects ({band.value}), skipped {len(skipped)}")
    return batches, skipped


def stack_batches(batches: Sequence[SegmentBatch]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Concatenate batches into (segments, labels, subject ids per segment)"""
    if not batches:
        raise SignalError("no segments to stack")
    x = np.concatenate([b.data for b in batches])
    y = np.concatenate([b.labels for b in batches])
    ids = np.concatenate([np.full(len(b), b.subject_id, dtype=object) for b in batches])
    return x, y, ids
