"""Stationary wavelet transform and EEG rhythm extraction"""
from src.wavelet.bands import BAND_RANGES, RHYTHMS, Band, BandStack, extract_bands, select_band
from src.wavelet.swt import SwtCoeffs, swt_decompose, swt_reconstruct, sym4_filters

__all__ = [
    "BAND_RANGES",
    "RHYTHMS",
    "Band",
    "BandStack",
    "extract_bands",
    "select_band",
    "SwtCoeffs",
    "swt_decompose",
    "swt_reconstruct",
    "sym4_filters",
]
