"""EEG recording container, manifests and synthetic datasets"""
from src.eegio.manifest import Manifest, ManifestEntry
from src.eegio.recording import (
    Label,
    Recording,
    decode_recording,
    encode_recording,
    read_recording,
    write_recording,
)
from src.eegio.synth import SynthSpec, synthesize_dataset, synthesize_subject

__all__ = [
    "Manifest",
    "ManifestEntry",
    "Label",
    "Recording",
    "decode_recording",
    "encode_recording",
    "read_recording",
    "write_recording",
    "SynthSpec",
    "synthesize_dataset",
    "synthesize_subject",
]
