"""
Labelled synthetic EEG for desk-scale experiments

Each band contributes a few frequency-swept sinusoids: the instantaneous
frequency of every component wanders slowly across the whole band, with sweep
rate and phase drawn per channel, under a slow amplitude envelope. A
class-independent 1/f background and white Gaussian noise are added on top.
Band power is the variance each band adds to a channel, so class signatures
are set directly through ``band_powers``; no subject owns a fixed tone that a
classifier could memorize.
"""
import logging
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from config import settings
from src.eegio.manifest import Manifest, ManifestEntry
from src.eegio.recording import Label, Recording, write_recording
from src.exceptions import SynthSpecError
from src.grad.rng import stream
from src.montage.positions import STANDARD_1020, extended_channels, reduced_channels

logger = logging.getLogger(__name__)

BAND_NAMES: Tuple[str, ...] = ("delta", "theta", "alpha", "beta", "gamma")

# Sweeps stay inside the interior of each band so the components keep
# clear of the band edges
SYNTH_FREQ_RANGES: Dict[str, Tuple[float, float]] = {
    "delta": (1.0, 3.5),
    "theta": (4.5, 7.5),
    "alpha": (8.5, 11.5),
    "beta": (17.0, 28.0),
    "gamma": (33.0, 42.0),
}

DEFAULT_BAND_POWERS: Dict[str, Dict[str, float]] = {
    "HC": {"delta": 0.2, "theta": 0.2, "alpha": 1.0, "beta": 0.3, "gamma": 0.1},
    "AD": {"delta": 1.0, "theta": 0.8, "alpha": 0.2, "beta": 0.25, "gamma": 0.03},
}

COMPONENTS_PER_BAND = 3
SWEEP_RATE_HZ = (0.05, 0.25)
BACKGROUND_FLOOR_HZ = 0.5


class SynthSpec(BaseModel):
    """Parameters of a synthetic two-class dataset"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    n_subjects_per_class: int = Field(4, ge=1)
    duration_s: float = Field(30.0, gt=0)
    fs: float = Field(256.0, gt=0)
    band_powers: Dict[str, Dict[str, float]] = Field(default_factory=lambda: DEFAULT_BAND_POWERS)
    noise_sigma: float = Field(0.5, ge=0)
    seed: int = Field(0, ge=0, lt=2 ** 64)
    montage: Literal["standard", "reduced", "extended"] = "standard"
    modulation_depth: float = Field(0.3, ge=0, lt=1)
    background_power: float = Field(0.1, ge=0)

    @field_validator("band_powers")
    @classmethod
    def _check_powers(cls, value: Dict[str, Dict[str, float]]) -> Dict[str, Dict[str, float]]:
        normalized = {}
        for label, powers in value.items():
            key = label.upper()
            if key not in Label.__members__:
                raise ValueError(f"unknown class {label!r}")
            for band, power in powers.items():
                if band not in BAND_NAMES:
                    raise ValueError(f"unknown band {band!r}")
                if not np.isfinite(power) or power < 0:
                    raise ValueError(f"band power must be non-negative, got {band}={power}")
            normalized[key] = dict(powers)
        missing = set(Label.__members__) - set(normalized)
        if missing:
            raise ValueError(f"band powers missing for {sorted(missing)}")
        return normalized

    @model_validator(mode="after")
    def _check_length(self) -> "SynthSpec":
        if self.duration_s * settings.TARGET_FS < 2 * settings.SEGMENT_LENGTH:
            raise ValueError(
                f"duration {self.duration_s}s gives fewer than {2 * settings.SEGMENT_LENGTH} samples at "
                f"{settings.TARGET_FS:g} Hz"
            )
        if SYNTH_FREQ_RANGES["gamma"][1] >= self.fs / 2:
            raise ValueError(f"fs={self.fs} cannot represent the gamma band")
        return self

    @classmethod
    def create(cls, **kwargs) -> "SynthSpec":
        """Build a spec, converting pydantic validation errors to SynthSpecError"""
        try:
            return cls(**kwargs)
        except ValidationError as e:
            raise SynthSpecError(f"invalid spec: {e}") from e

    def channels(self) -> List[str]:
        if self.montage == "reduced":
            return reduced_channels()
        if self.montage == "extended":
            return extended_channels()
        return list(STANDARD_1020)


def pink_background(rng: np.random.Generator, n_channels: int, n_samples: int, fs: float, power: float) -> np.ndarray:
    """Independent 1/f noise per channel with variance ``power``

    White noise is shaped in the frequency domain by 1/sqrt(f); bins below
    BACKGROUND_FLOOR_HZ are removed so the drift stays bounded.
    """
    white = rng.standard_normal((n_channels, n_samples))
    freqs = np.fft.rfftfreq(n_samples, d=1.0 / fs)
    shape = np.zeros_like(freqs)
    keep = freqs >= BACKGROUND_FLOOR_HZ
    shape[keep] = 1.0 / np.sqrt(freqs[keep])
    pink = np.fft.irfft(np.fft.rfft(white, axis=-1) * shape, n=n_samples, axis=-1)
    std = pink.std(axis=-1, keepdims=True)
    return np.sqrt(power) * pink / np.where(std > 0, std, 1.0)


def swept_component(rng: np.random.Generator, n_channels: int, t: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Unit-amplitude sinusoids whose frequency sweeps lo..hi, one per channel

    Instantaneous frequency is centre + half_width * sin(2 pi r t + s) with the
    sweep rate r, sweep phase s and carrier phase drawn per channel.
    """
    centre, half_width = (lo + hi) / 2.0, (hi - lo) / 2.0
    rate = rng.uniform(*SWEEP_RATE_HZ, size=(n_channels, 1))
    sweep_phase = rng.uniform(0, 2 * np.pi, size=(n_channels, 1))
    offset = rng.uniform(0, 2 * np.pi, size=(n_channels, 1))
    phase = (2 * np.pi * centre * t
             - (half_width / rate) * np.cos(2 * np.pi * rate * t + sweep_phase)
             + offset)
    return np.sin(phase)


def synthesize_subject(spec: SynthSpec, label: Label, index: int) -> Recording:
    """Generate one subject's recording; depends only on (seed, label, index)"""
    rng = stream(spec.seed, "synth", int(label), index)
    channels = spec.channels()
    n_samples = int(round(spec.duration_s * spec.fs))
    t = np.arange(n_samples) / spec.fs
    data = np.zeros((len(channels), n_samples))
    # Envelope 1 + d*sin(.) has mean square 1 + d^2/2
    envelope_norm = np.sqrt(1.0 + spec.modulation_depth ** 2 / 2.0)

    for band in BAND_NAMES:
        power = spec.band_powers[label.name].get(band, 0.0)
        if power <= 0:
            continue
        lo, hi = SYNTH_FREQ_RANGES[band]
        amplitude = np.sqrt(2.0 * power / COMPONENTS_PER_BAND) / envelope_norm
        for _ in range(COMPONENTS_PER_BAND):
            mod_freq = rng.uniform(0.05, 0.2)
            mod_phase = rng.uniform(0, 2 * np.pi)
            envelope = 1.0 + spec.modulation_depth * np.sin(2 * np.pi * mod_freq * t + mod_phase)
            data += amplitude * envelope * swept_component(rng, len(channels), t, lo, hi)

    if spec.background_power > 0:
        data += pink_background(rng, len(channels), n_samples, spec.fs, spec.background_power)
    data += rng.normal(0.0, spec.noise_sigma, size=data.shape)
    return Recording(
        subject_id=f"{label.name}-{index + 1:03d}",
        label=label,
        fs=spec.fs,
        channels=channels,
        data=data,
    )


def synthesize_dataset(
    spec: SynthSpec,
    out_dir: Optional[Union[str, Path]] = None,
) -> Tuple[Manifest, List[Recording]]:
    """Generate a balanced HC/AD dataset

    Args:
        spec: Dataset parameters
        out_dir: When given, recordings are written as ``<subject>.eegb`` and
            the manifest as ``manifest.jsonl`` inside it

    Returns:
        The manifest and the in-memory recordings, HC subjects first
    """
    recordings = [
        synthesize_subject(spec, label, i)
        for label in (Label.HC, Label.AD)
        for i in range(spec.n_subjects_per_class)
    ]
    base = Path(out_dir) if out_dir is not None else Path(".")
    manifest = Manifest(
        ManifestEntry(rec.subject_id, rec.label, base / f"{rec.subject_id}.eegb") for rec in recordings
    )
    if out_dir is not None:
        for rec, entry in zip(recordings, manifest):
            write_recording(rec, entry.path)
        manifest.write(base / settings.MANIFEST_NAME)
        logger.info(f"Synthesized {len(recordings)} recordings into {base}")
    return manifest, recordings
