"""
Stationary (undecimated) wavelet transform with the sym4 filter bank

Level j filters with taps spaced 2**(j-1) apart (a trous) and periodic
boundaries, so every coefficient sequence keeps the input length:
    A_j[n] = sum_k h[k] A_{j-1}[n - k s],   D_j[n] = sum_k g[k] A_{j-1}[n - k s]
and the inverse averages the two time-reversed synthesis branches:
    A_{j-1}[n] = 1/2 sum_k (h[k] A_j[n + k s] + g[k] D_j[n + k s]).
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from config import settings
from src.exceptions import WaveletError

logger = logging.getLogger(__name__)

# Symlet-4 decomposition low-pass
_SYM4_LO = np.array([
    -0.07576571478927333,
    -0.02963552764599851,
    0.49761866763201545,
    0.8037387518059161,
    0.29785779560527736,
    -0.09921954357684722,
    -0.012603967262037833,
    0.0322231006040427,
])


def sym4_filters() -> Tuple[np.ndarray, np.ndarray]:
    """Low-pass h and high-pass g[k] = (-1)^k h[7-k]"""
    h = _SYM4_LO.copy()
    k = np.arange(len(h))
    g = (-1.0) ** k * h[::-1]
    return h, g


@dataclass(eq=False)
class SwtCoeffs:
    """approx[j-1] = A_j and details[j-1] = D_j for j = 1..levels"""
    approx: List[np.ndarray] = field(repr=False)
    details: List[np.ndarray] = field(repr=False)

    @property
    def levels(self) -> int:
        return len(self.details)


def _filter(x: np.ndarray, taps: np.ndarray, spacing: int, direction: int) -> np.ndarray:
    """Circular filtering along the last axis; direction +1 analyses, -1 synthesizes"""
    out = np.zeros_like(x)
    for k, tap in enumerate(taps):
        out += tap * np.roll(x, direction * k * spacing, axis=-1)
    return out


def swt_decompose(x: np.ndarray, levels: int = settings.SWT_LEVELS) -> SwtCoeffs:
    """Undecimated decomposition along the last axis

    The length must be a multiple of 2**levels and at least as long as the
    deepest dilated filter, 2**levels * 8 samples.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[-1]
    if levels < 1:
        raise WaveletError(f"levels must be >= 1, got {levels}")
    if n % (2 ** levels):
        raise WaveletError(f"length not divisible by 2^{levels}: {n}")
    if n < 2 ** levels * len(_SYM4_LO):
        raise WaveletError(f"signal too short for {levels} levels: {n} < {2 ** levels * len(_SYM4_LO)} samples")
    h, g = sym4_filters()
    approx, details = [], []
    a = x
    for j in range(1, levels + 1):
        spacing = 2 ** (j - 1)
        details.append(_filter(a, g, spacing, +1))
        a = _filter(a, h, spacing, +1)
        approx.append(a)
    return SwtCoeffs(approx=approx, details=details)


def swt_reconstruct(coeffs: SwtCoeffs, approx: Optional[np.ndarray] = None) -> np.ndarray:
    """Inverse SWT from the deepest approximation and every detail level

    Args:
        coeffs: Decomposition to invert
        approx: Replacement for A_J; defaults to ``coeffs.approx[-1]``
    """
    if not coeffs.details:
        raise WaveletError("no detail levels to reconstruct from")
    a = coeffs.approx[-1] if approx is None else approx
    shape = a.shape
    if any(d.shape != shape for d in coeffs.details):
        raise WaveletError("inconsistent coefficient lengths")
    h, g = sym4_filters()
    for j in range(coeffs.levels, 0, -1):
        spacing = 2 ** (j - 1)
        a = 0.5 * (_filter(a, h, spacing, -1) + _filter(coeffs.details[j - 1], g, spacing, -1))
    return a
