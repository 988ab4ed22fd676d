"""
Band-pass filtering, rational resampling and band power
"""
import logging
from fractions import Fraction
from functools import lru_cache
from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import signal

from config import settings
from src.exceptions import SignalError

logger = logging.getLogger(__name__)


class FilterSpec(BaseModel):
    """Butterworth band-pass design"""
    model_config = ConfigDict(frozen=True)

    lo: float = Field(settings.BANDPASS_LO, gt=0)
    hi: float = Field(settings.BANDPASS_HI, gt=0)
    order: int = Field(settings.FILTER_ORDER, ge=1)
    zero_phase: bool = True

    @model_validator(mode="after")
    def _check_band(self) -> "FilterSpec":
        if self.lo >= self.hi:
            raise ValueError(f"lo ({self.lo}) must be below hi ({self.hi})")
        return self

    def check(self, fs: float) -> None:
        if self.hi >= fs / 2:
            raise SignalError(f"cutoff {self.hi} Hz is at or above Nyquist ({fs / 2} Hz)")

    def padlen(self) -> int:
        return 3 * self.order


@lru_cache(maxsize=64)
def _design(lo: float, hi: float, order: int, fs: float) -> np.ndarray:
    return signal.butter(order, [lo, hi], btype="bandpass", fs=fs, output="sos")


def bandpass(x: np.ndarray, fs: float, spec: FilterSpec = FilterSpec()) -> np.ndarray:
    """Zero-phase Butterworth band-pass along the last axis

    Edges are extended by odd reflection of 3*order samples.
    """
    spec.check(fs)
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] <= spec.padlen():
        raise SignalError(f"signal too short: {x.shape[-1]} samples, need more than {spec.padlen()}")
    sos = _design(spec.lo, spec.hi, spec.order, float(fs))
    if not spec.zero_phase:
        return signal.sosfilt(sos, x, axis=-1)
    return signal.sosfiltfilt(sos, x, axis=-1, padtype="odd", padlen=spec.padlen())


def rational_ratio(fs_in: float, fs_out: float) -> Tuple[int, int]:
    """Smallest (up, down) with up/down == fs_out/fs_in and down <= 1000"""
    if fs_in <= 0 or fs_out <= 0:
        raise SignalError(f"sampling rates must be positive, got {fs_in} -> {fs_out}")
    ratio = Fraction(fs_out / fs_in).limit_denominator(settings.RESAMPLE_MAX_DENOMINATOR)
    if abs(float(ratio) - fs_out / fs_in) > 1e-12 * (fs_out / fs_in):
        raise SignalError(f"resampling ratio {fs_out}/{fs_in} is not a small rational")
    if max(ratio.numerator, ratio.denominator) > settings.RESAMPLE_MAX_DENOMINATOR:
        raise SignalError(f"resampling ratio {ratio} exceeds {settings.RESAMPLE_MAX_DENOMINATOR}")
    return ratio.numerator, ratio.denominator


@lru_cache(maxsize=32)
def _antialias_taps(up: int, down: int) -> np.ndarray:
    """Kaiser windowed-sinc low-pass at min(pi/up, pi/down); resample_poly applies the gain of up"""
    n_taps = settings.RESAMPLE_TAPS_PER_PHASE * max(up, down) + 1
    cutoff = 1.0 / max(up, down)
    taps = signal.firwin(n_taps, cutoff, window=("kaiser", settings.RESAMPLE_KAISER_BETA))
    return taps


def resample(x: np.ndarray, fs_in: float, fs_out: float = settings.TARGET_FS) -> np.ndarray:
    """Polyphase resampling along the last axis

    Output length is round(n * fs_out / fs_in).
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] == 0:
        raise SignalError("cannot resample an empty signal")
    up, down = rational_ratio(fs_in, fs_out)
    if up == down:
        return x.copy()
    y = signal.resample_poly(x, up, down, axis=-1, window=_antialias_taps(up, down))
    n_out = int(round(x.shape[-1] * up / down))
    return y[..., :n_out]


def band_power(x: np.ndarray, fs: float, lo: float, hi: float) -> np.ndarray:
    """Welch power between lo and hi Hz along the last axis"""
    x = np.asarray(x, dtype=np.float64)
    nperseg = int(min(x.shape[-1], max(256, 4 * fs)))
    freqs, psd = signal.welch(x, fs=fs, nperseg=nperseg, axis=-1)
    mask = (freqs >= lo) & (freqs < hi)
    return np.trapezoid(psd[..., mask], freqs[mask], axis=-1)
