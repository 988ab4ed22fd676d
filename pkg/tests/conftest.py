import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from src.eegio.synth import SynthSpec, synthesize_dataset
from src.model.config import ModelConfig


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_spec():
    return SynthSpec(n_subjects_per_class=3, duration_s=6.0, fs=256.0, seed=7)


@pytest.fixture
def small_dataset(tmp_path, small_spec):
    """Six subjects written to disk; returns (manifest, recordings, directory)"""
    manifest, recordings = synthesize_dataset(small_spec, tmp_path / "synth")
    return manifest, recordings, tmp_path / "synth"


@pytest.fixture
def tiny_config():
    return ModelConfig(n_channels=19, seg_len=8, d_model=4, bottleneck=2, n_stages=1, dropout=0.0)
