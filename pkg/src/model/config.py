"""
Architecture and training hyperparameters
"""
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from config import settings


class ModelConfig(BaseModel):
    """Shape of a DeepTokenEEG network"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    n_channels: int = Field(19, ge=1)
    seg_len: int = Field(settings.SEGMENT_LENGTH, ge=1)
    d_model: int = Field(settings.D_MODEL, gt=0)
    bottleneck: int = Field(settings.BOTTLENECK, gt=0)
    k_token: int = Field(settings.K_TOKEN, ge=1)
    k_res: int = Field(settings.K_RES, ge=1)
    n_stages: int = Field(settings.N_STAGES, ge=1, le=settings.MAX_STAGES)
    dilation_mode: Literal["constant", "exponential"] = "constant"
    dilation: int = Field(settings.DILATION, ge=1)
    dilations: Optional[List[int]] = None
    n_classes: int = Field(settings.N_CLASSES, ge=2)
    dropout: float = Field(settings.DROPOUT, ge=0, lt=1)

    @field_validator("k_token", "k_res")
    @classmethod
    def _odd_kernel(cls, value: int) -> int:
        if value % 2 == 0:
            raise ValueError(f"kernel sizes must be odd, got {value}")
        return value

    @model_validator(mode="after")
    def _check_dilations(self) -> "ModelConfig":
        if self.dilations is not None:
            if len(self.dilations) != self.n_stages:
                raise ValueError(f"{len(self.dilations)} dilations given for {self.n_stages} stages")
            if any(m < 1 for m in self.dilations):
                raise ValueError(f"dilations must be >= 1, got {self.dilations}")
        return self

    def stage_dilations(self) -> List[int]:
        """Per-stage dilation m_j: explicit list, constant, or 2, 4, 8, ..."""
        if self.dilations is not None:
            return list(self.dilations)
        if self.dilation_mode == "exponential":
            return [2 ** (j + 1) for j in range(self.n_stages)]
        return [self.dilation] * self.n_stages


class TrainConfig(BaseModel):
    """Optimization schedule; constant learning rate, no weight decay"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    epochs: int = Field(settings.EPOCHS, ge=0)
    batch_size: int = Field(settings.BATCH_SIZE, ge=1)
    lr: float = Field(settings.LEARNING_RATE, ge=0)
    beta1: float = Field(settings.ADAM_BETA1, ge=0, lt=1)
    beta2: float = Field(settings.ADAM_BETA2, ge=0, lt=1)
    eps: float = Field(settings.ADAM_EPS, gt=0)
    dtype: Literal["float32", "float64"] = settings.TRAIN_DTYPE
