"""
Mapping of the four-level SWT onto the canonical EEG rhythms
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Tuple, Union

import numpy as np

from config import settings
from src.exceptions import WaveletError
from src.wavelet.swt import SwtCoeffs, swt_decompose, swt_reconstruct

logger = logging.getLogger(__name__)


class Band(str, Enum):
    DELTA = "delta"
    THETA = "theta"
    ALPHA = "alpha"
    BETA = "beta"
    GAMMA = "gamma"
    FULL = "full"

    @classmethod
    def parse(cls, value: Union[str, "Band"]) -> "Band":
        if isinstance(value, Band):
            return value
        key = str(value).strip().lower()
        aliases = {"δ": "delta", "θ": "theta", "α": "alpha", "β": "beta", "γ": "gamma"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            choices = ", ".join(b.value for b in cls)
            raise WaveletError(f"unknown band {value!r}; choose from {choices}") from None


RHYTHMS: List[Band] = [Band.DELTA, Band.THETA, Band.ALPHA, Band.BETA, Band.GAMMA]

# Nominal frequency interval of each band at 128 Hz
BAND_RANGES: Dict[Band, Tuple[float, float]] = {
    Band.DELTA: (0.0, 4.0),
    Band.THETA: (4.0, 8.0),
    Band.ALPHA: (8.0, 16.0),
    Band.BETA: (16.0, 32.0),
    Band.GAMMA: (32.0, 64.0),
}

# Detail level that carries each rhythm; delta is the deepest approximation
_DETAIL_LEVEL = {Band.THETA: 4, Band.ALPHA: 3, Band.BETA: 2, Band.GAMMA: 1}


@dataclass(eq=False)
class BandStack:
    """Per-channel rhythm signals, each the same length as the input"""
    bands: Dict[Band, np.ndarray] = field(repr=False)
    fs: float = settings.TARGET_FS

    def __getitem__(self, band: Union[str, "Band"]) -> np.ndarray:
        return self.bands[Band.parse(band)]

    def total(self) -> np.ndarray:
        return sum(self.bands[b] for b in RHYTHMS)

    def energies(self) -> Dict[Band, float]:
        return {b: float(np.sum(self.bands[b] ** 2)) for b in RHYTHMS}


def band_projection(coeffs: SwtCoeffs, band: Band) -> np.ndarray:
    """Single-branch reconstruction of one sub-band back into the signal domain"""
    levels = coeffs.levels
    if levels != settings.SWT_LEVELS:
        raise WaveletError(f"band mapping needs {settings.SWT_LEVELS} levels, got {levels}")
    zero = np.zeros_like(coeffs.approx[-1])
    if band is Band.DELTA:
        return swt_reconstruct(SwtCoeffs(approx=[coeffs.approx[-1]], details=[zero] * levels))
    level = _DETAIL_LEVEL[band]
    details = [coeffs.details[j] if j == level - 1 else zero for j in range(levels)]
    return swt_reconstruct(SwtCoeffs(approx=[zero], details=details))


def extract_bands(x: np.ndarray, fs: float = settings.TARGET_FS) -> BandStack:
    """Split a 128 Hz signal (last axis) into delta, theta, alpha, beta and gamma

    Args:
        x: Signal or (channels, samples) matrix; length divisible by 16
        fs: Sampling rate of ``x``; the band layout only holds at 128 Hz

    Returns:
        BandStack whose five bands sum back to ``x``
    """
    if fs != settings.TARGET_FS:
        raise WaveletError(f"band extraction requires fs={settings.TARGET_FS:g} Hz, got {fs:g}")
    coeffs = swt_decompose(x, settings.SWT_LEVELS)
    bands = {band: band_projection(coeffs, band) for band in RHYTHMS}
    return BandStack(bands=bands, fs=fs)


def select_band(x: np.ndarray, band: Union[str, "Band"], fs: float = settings.TARGET_FS) -> np.ndarray:
    """One band of ``x``, or ``x`` itself for the full band"""
    band = Band.parse(band)
    if band is Band.FULL:
        return np.asarray(x, dtype=np.float64)
    if fs != settings.TARGET_FS:
        raise WaveletError(f"band extraction requires fs={settings.TARGET_FS:g} Hz, got {fs:g}")
    coeffs = swt_decompose(x, settings.SWT_LEVELS)
    return band_projection(coeffs, band)
