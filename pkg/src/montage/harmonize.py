"""
Channel harmonization onto the 19-channel 10-20 montage
"""
import logging
from typing import Optional

import numpy as np

from config import settings
from src.eegio.recording import Recording
from src.exceptions import MontageError
from src.montage.positions import MontageSpec, PositionTable, builtin_positions, canonical_name, standard_montage
from src.montage.spline import MIN_SOURCES, SplineSolver

logger = logging.getLogger(__name__)


def harmonize(rec: Recording,
              target: Optional[MontageSpec] = None,
              table: Optional[PositionTable] = None,
              m: int = settings.SPLINE_ORDER,
              lam: float = settings.SPLINE_LAMBDA,
              n_terms: int = settings.SPLINE_TERMS) -> Recording:
    """Map a recording onto the target montage

    Channels present in the input are copied unchanged. If every target
    channel is present the extra channels are discarded; otherwise the
    missing ones are filled by spherical spline interpolation from all input
    channels, with one factorization shared by every time sample.

    Args:
        rec: Input recording with any channel set
        target: Target montage; defaults to the 19-channel 10-20 layout
        table: Position lookup for input channels; defaults to the built-in table

    Returns:
        Recording whose channels are exactly the target names in order
    """
    table = table or builtin_positions()
    target = target or standard_montage(table)
    lookup = {canonical_name(name).upper(): i for i, name in enumerate(rec.channels)}
    present = [lookup.get(name.upper()) for name in target.names]
    missing = [name for name, idx in zip(target.names, present) if idx is None]

    out = np.empty((len(target), rec.n_samples), dtype=np.float64)
    for row, idx in enumerate(present):
        if idx is not None:
            out[row] = rec.data[idx]

    if missing:
        unknown = [name for name in rec.channels if name not in table]
        if unknown:
            raise MontageError(f"unknown position for input channels {unknown}")
        if rec.n_channels < MIN_SOURCES:
            raise MontageError(f"need at least {MIN_SOURCES} known channels, got {rec.n_channels}")
        solver = SplineSolver(table.positions(rec.channels), m=m, lam=lam, n_terms=n_terms)
        model = solver.fit(rec.data.astype(np.float64))
        dst_rows = [target.names.index(name) for name in missing]
        out[dst_rows] = solver.interpolate(model, target.positions[dst_rows])
        logger.info(f"{rec.subject_id}: interpolated {missing} from {rec.n_channels} channels")
    elif rec.n_channels > len(target):
        logger.debug(f"{rec.subject_id}: kept {len(target)} of {rec.n_channels} channels")

    return Recording(
        subject_id=rec.subject_id,
        label=rec.label,
        fs=rec.fs,
        channels=list(target.names),
        data=out,
    )
