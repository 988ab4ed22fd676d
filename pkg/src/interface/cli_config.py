"""
Command-line settings with flag > config file > default precedence
"""
import logging
from pathlib import Path
from typing import Any, Dict, Literal, Optional, Union

import orjson
from pydantic import BaseModel, ConfigDict, Field

from config import settings
from src.eegio.synth import SynthSpec
from src.model.config import ModelConfig, TrainConfig

logger = logging.getLogger(__name__)


class CliConfig(BaseModel):
    """Every knob a subcommand can take; unknown keys are rejected"""
    model_config = ConfigDict(extra="forbid")

    seed: int = Field(settings.SEED, ge=0)
    band: str = "full"
    folds: int = Field(settings.N_FOLDS, ge=2)
    repeats: int = Field(settings.N_REPEATS, ge=1)
    jobs: int = Field(settings.JOBS, ge=1)

    # synthetic data
    subjects: int = Field(4, ge=1)
    duration: float = Field(30.0, gt=0)
    fs: float = Field(256.0, gt=0)
    montage: Literal["standard", "reduced", "extended"] = "standard"
    noise: float = Field(0.5, ge=0)

    # training
    epochs: int = Field(settings.EPOCHS, ge=0)
    batch_size: int = Field(settings.BATCH_SIZE, ge=1)
    lr: float = Field(settings.LEARNING_RATE, ge=0)

    # architecture
    d_model: int = Field(settings.D_MODEL, gt=0)
    bottleneck: int = Field(settings.BOTTLENECK, gt=0)
    n_stages: int = Field(settings.N_STAGES, ge=1, le=settings.MAX_STAGES)
    dilation_mode: Literal["constant", "exponential"] = "constant"
    dilation: int = Field(settings.DILATION, ge=1)
    dropout: float = Field(settings.DROPOUT, ge=0, lt=1)

    @classmethod
    def resolve(cls, config_path: Optional[Union[str, Path]] = None, **flags: Any) -> "CliConfig":
        """Merge defaults, then the JSON file, then every flag that was given"""
        values: Dict[str, Any] = {}
        if config_path:
            with open(config_path, "rb") as f:
                loaded = orjson.loads(f.read())
            if not isinstance(loaded, dict):
                raise ValueError(f"{config_path}: expected a JSON object")
            values.update(loaded)
            logger.debug(f"Loaded {sorted(loaded)} from {config_path}")
        values.update({k: v for k, v in flags.items() if v is not None})
        return cls(**values)

    def model(self) -> ModelConfig:
        return ModelConfig(
            d_model=self.d_model,
            bottleneck=self.bottleneck,
            n_stages=self.n_stages,
            dilation_mode=self.dilation_mode,
            dilation=self.dilation,
            dropout=self.dropout,
        )

    def training(self) -> TrainConfig:
        return TrainConfig(epochs=self.epochs, batch_size=self.batch_size, lr=self.lr)

    def synth(self) -> SynthSpec:
        return SynthSpec.create(
            n_subjects_per_class=self.subjects,
            duration_s=self.duration,
            fs=self.fs,
            noise_sigma=self.noise,
            seed=self.seed,
            montage=self.montage,
        )
