"""
Electrode position tables on the unit sphere

Positions come from spherical (inclination, azimuth) pairs in degrees, with
the sign of the inclination selecting the hemisphere:
    x = sin(theta) cos(phi), y = sin(theta) sin(phi), z = cos(theta)
+x points to the right ear, +y to the nasion, +z to the vertex.
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import orjson

from config import settings
from src.exceptions import MontageError

logger = logging.getLogger(__name__)

# Canonical 19-channel 10-20 order
STANDARD_1020: Tuple[str, ...] = (
    "Fp1", "Fp2", "F7", "F3", "Fz", "F4", "F8",
    "T7", "C3", "Cz", "C4", "T8",
    "P7", "P3", "Pz", "P4", "P8",
    "O1", "O2",
)

_SPHERICAL_DEG: Dict[str, Tuple[float, float]] = {
    "Fp1": (-92, -72), "Fp2": (92, 72),
    "F7": (-92, -36), "F3": (-60, -51), "Fz": (46, 90), "F4": (60, 51), "F8": (92, 36),
    "T7": (-92, 0), "C3": (-46, 0), "Cz": (0, 0), "C4": (46, 0), "T8": (92, 0),
    "P7": (-92, 36), "P3": (-60, 51), "Pz": (46, -90), "P4": (60, -51), "P8": (92, -36),
    "O1": (-92, 72), "O2": (92, -72),
    # 10-10 extras, used by high-density montages
    "Fpz": (92, 90), "AFz": (69, 90), "FCz": (23, 90),
    "CPz": (23, -90), "POz": (69, -90), "Oz": (92, -90),
    "C5": (-69, 0), "C1": (-23, 0), "C2": (23, 0), "C6": (69, 0),
}

EXTENDED_EXTRAS: Tuple[str, ...] = ("Fpz", "AFz", "FCz", "CPz", "POz", "Oz", "C5", "C1", "C2", "C6")

# Channels withheld by the reduced (16-channel) synthetic montage
REDUCED_MISSING: Tuple[str, ...] = ("F3", "Cz", "P4")

# Legacy 10-20 names
ALIASES: Dict[str, str] = {"T3": "T7", "T4": "T8", "T5": "P7", "T6": "P8"}


def spherical_to_unit(theta_deg: float, phi_deg: float) -> np.ndarray:
    theta, phi = np.deg2rad(theta_deg), np.deg2rad(phi_deg)
    v = np.array([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)])
    return v / np.linalg.norm(v)


@dataclass(frozen=True, eq=False)
class MontageSpec:
    """Named electrode set with unit-sphere positions"""
    names: Tuple[str, ...]
    positions: np.ndarray

    def __post_init__(self) -> None:
        positions = np.asarray(self.positions, dtype=np.float64)
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "positions", positions)
        if positions.shape != (len(self.names), 3):
            raise MontageError(f"positions shape {positions.shape} does not match {len(self.names)} names")
        if len({n.upper() for n in self.names}) != len(self.names):
            raise MontageError("montage channel names must be unique")
        norms = np.linalg.norm(positions, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise MontageError("montage positions must lie on the unit sphere")

    def __len__(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        key = canonical_name(name).upper()
        for i, n in enumerate(self.names):
            if n.upper() == key:
                return i
        raise MontageError(f"channel {name!r} not in montage")


def canonical_name(name: str) -> str:
    """Map legacy names (T3, T4, T5, T6) to their 10-10 equivalents"""
    stripped = name.strip()
    for legacy, modern in ALIASES.items():
        if stripped.upper() == legacy.upper():
            return modern
    return stripped


class PositionTable:
    """Case-insensitive name -> unit vector lookup"""

    def __init__(self, positions: Dict[str, Sequence[float]]) -> None:
        self._names: Dict[str, str] = {}
        self._positions: Dict[str, np.ndarray] = {}
        for name, xyz in positions.items():
            v = np.asarray(xyz, dtype=np.float64)
            norm = np.linalg.norm(v)
            if v.shape != (3,) or not np.isfinite(norm) or norm == 0:
                raise MontageError(f"bad position for {name!r}: {xyz}")
            self._names[name.upper()] = name
            self._positions[name.upper()] = v / norm

    def __contains__(self, name: str) -> bool:
        return canonical_name(name).upper() in self._positions

    def position(self, name: str) -> np.ndarray:
        key = canonical_name(name).upper()
        if key not in self._positions:
            raise MontageError(f"unknown position for channel {name!r}")
        return self._positions[key]

    def positions(self, names: Iterable[str]) -> np.ndarray:
        return np.stack([self.position(n) for n in names])

    def montage(self, names: Iterable[str]) -> MontageSpec:
        names = [canonical_name(n) for n in names]
        return MontageSpec(names=tuple(names), positions=self.positions(names))

    def updated(self, overrides: Dict[str, Sequence[float]]) -> "PositionTable":
        merged = {self._names[k]: v for k, v in self._positions.items()}
        merged.update(overrides)
        return PositionTable(merged)


def builtin_positions() -> PositionTable:
    return PositionTable({name: spherical_to_unit(*angles) for name, angles in _SPHERICAL_DEG.items()})


def load_positions(path: Union[str, Path]) -> Dict[str, List[float]]:
    """Read a JSON object of name -> [x, y, z]"""
    with open(path, "rb") as f:
        try:
            obj = orjson.loads(f.read())
        except orjson.JSONDecodeError as e:
            raise MontageError(f"{path}: {e}") from e
    if not isinstance(obj, dict):
        raise MontageError(f"{path}: expected an object of name -> [x, y, z]")
    return obj


def position_table(path: Optional[Union[str, Path]] = None) -> PositionTable:
    """Built-in table, optionally overridden by a JSON positions file

    Args:
        path: JSON file; defaults to TOKENEEG_MONTAGE_FILE when set
    """
    table = builtin_positions()
    path = path or settings.MONTAGE_FILE
    if path:
        overrides = load_positions(path)
        logger.info(f"Loaded {len(overrides)} electrode positions from {path}")
        table = table.updated(overrides)
    return table


def standard_montage(table: Optional[PositionTable] = None) -> MontageSpec:
    """The 19-channel 10-20 target montage in canonical order"""
    return (table or builtin_positions()).montage(STANDARD_1020)


def reduced_channels() -> List[str]:
    return [n for n in STANDARD_1020 if n not in REDUCED_MISSING]


def extended_channels() -> List[str]:
    return list(STANDARD_1020) + list(EXTENDED_EXTRAS)
