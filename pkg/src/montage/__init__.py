"""Electrode positions and spherical spline montage harmonization"""
from src.montage.harmonize import harmonize
from src.montage.positions import (
    STANDARD_1020,
    MontageSpec,
    PositionTable,
    builtin_positions,
    load_positions,
    position_table,
    standard_montage,
)
from src.montage.spline import SplineModel, SplineSolver, fit_spline, interpolate_at, legendre, spline_kernel

__all__ = [
    "harmonize",
    "STANDARD_1020",
    "MontageSpec",
    "PositionTable",
    "builtin_positions",
    "load_positions",
    "position_table",
    "standard_montage",
    "SplineModel",
    "SplineSolver",
    "fit_spline",
    "interpolate_at",
    "legendre",
    "spline_kernel",
]
