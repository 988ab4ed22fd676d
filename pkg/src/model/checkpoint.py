"""
DTKC v1 model checkpoint codec

Layout (little-endian):
    magic      4 bytes  b"DTKC"
    version    u16
    config     u32 length + JSON (sorted keys)
    n_tensors  u32
    tensors    n_tensors x (u16 name length, name, u8 ndim, ndim x u32 dims, float32 payload)
Tensors are written in the model's parameter order followed by its buffers,
so equal models always produce equal bytes.
"""
import io
import logging
import math
import os
import struct
from pathlib import Path
from typing import BinaryIO, Union

import numpy as np
import orjson
from pydantic import ValidationError

from src.eegio.recording import decode_text, read_exact
from src.exceptions import CheckpointError, ShapeError
from src.model.config import ModelConfig
from src.model.network import DeepTokenEEG

logger = logging.getLogger(__name__)

MAGIC = b"DTKC"
VERSION = 1
TENSOR_DTYPE = np.dtype("<f4")

_HEADER = struct.Struct("<4sH")
_U8 = struct.Struct("<B")
_U16 = struct.Struct("<H")
_U32 = struct.Struct("<I")


def encode_checkpoint(model: DeepTokenEEG) -> bytes:
    out = io.BytesIO()
    out.write(_HEADER.pack(MAGIC, VERSION))
    config = orjson.dumps(model.config.model_dump(), option=orjson.OPT_SORT_KEYS)
    out.write(_U32.pack(len(config)))
    out.write(config)
    state = model.state_dict()
    out.write(_U32.pack(len(state)))
    for name, value in state.items():
        raw_name = name.encode("utf-8")
        out.write(_U16.pack(len(raw_name)))
        out.write(raw_name)
        out.write(_U8.pack(value.ndim))
        for dim in value.shape:
            out.write(_U32.pack(dim))
        out.write(np.ascontiguousarray(value, dtype=TENSOR_DTYPE).tobytes())
    return out.getvalue()


def _read(stream: BinaryIO, n: int, what: str) -> bytes:
    return read_exact(stream, n, what, error=CheckpointError)


def decode_checkpoint(stream: BinaryIO) -> DeepTokenEEG:
    magic, version = _HEADER.unpack(_read(stream, _HEADER.size, "header"))
    if magic != MAGIC:
        raise CheckpointError(f"bad magic {magic!r}")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    (config_len,) = _U32.unpack(_read(stream, _U32.size, "config length"))
    try:
        config = ModelConfig(**orjson.loads(_read(stream, config_len, "config")))
    except (orjson.JSONDecodeError, ValidationError, TypeError) as e:
        raise CheckpointError(f"bad config block: {e}") from e

    (n_tensors,) = _U32.unpack(_read(stream, _U32.size, "tensor count"))
    state = {}
    for _ in range(n_tensors):
        (name_len,) = _U16.unpack(_read(stream, _U16.size, "name length"))
        name = decode_text(_read(stream, name_len, "tensor name"), "tensor name", error=CheckpointError)
        (ndim,) = _U8.unpack(_read(stream, _U8.size, f"{name} rank"))
        shape = tuple(_U32.unpack(_read(stream, _U32.size, f"{name} shape"))[0] for _ in range(ndim))
        count = math.prod(shape)
        payload = _read(stream, count * TENSOR_DTYPE.itemsize, f"{name} values")
        state[name] = np.frombuffer(payload, dtype=TENSOR_DTYPE).reshape(shape)
    if stream.read(1):
        raise CheckpointError("trailing bytes after last tensor")

    model = DeepTokenEEG(config).astype(np.float32)
    try:
        model.load_state_dict(state)
    except ShapeError as e:
        raise CheckpointError(f"checkpoint does not match its config: {e}") from e
    return model.eval()


def save_checkpoint(model: DeepTokenEEG, path: Union[str, Path]) -> None:
    """Write ``model`` (parameters and BatchNorm running statistics) to ``path``"""
    os.makedirs(Path(path).parent, exist_ok=True)
    with open(path, "wb") as f:
        f.write(encode_checkpoint(model))
    logger.info(f"Saved checkpoint ({model.n_params} parameters) to {path}")


def load_checkpoint(path: Union[str, Path]) -> DeepTokenEEG:
    """Rebuild a model from a checkpoint; float32 values, eval mode"""
    with open(path, "rb") as f:
        return decode_checkpoint(f)
