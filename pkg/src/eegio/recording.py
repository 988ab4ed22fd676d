"""
EEGB v1 recording container and its binary codec

Layout (little-endian):
    magic        4 bytes  b"EEGB"
    version      u16
    fs           f64
    n_channels   u16
    n_samples    u64
    label        u8
    subject_id   u16 length + UTF-8 bytes
    channels     n_channels x (u16 length + UTF-8 bytes)
    payload      n_channels * n_samples float32, channel-major
"""
import os
import struct
import logging
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import BinaryIO, List, Optional, Type, Union

import numpy as np

from src.exceptions import InvalidRecordingError, RecordingFormatError, TokenEEGError

logger = logging.getLogger(__name__)

MAGIC = b"EEGB"
VERSION = 1
PAYLOAD_DTYPE = np.dtype("<f4")

_FIXED_HEADER = struct.Struct("<4sHdHQB")
_LENGTH = struct.Struct("<H")


class Label(IntEnum):
    """Diagnostic class; AD is the positive class"""
    HC = 0
    AD = 1

    @classmethod
    def parse(cls, value: Union[str, int, "Label"]) -> "Label":
        if isinstance(value, str):
            try:
                return cls[value.upper()]
            except KeyError:
                raise InvalidRecordingError(f"unknown label {value!r}") from None
        try:
            return cls(int(value))
        except ValueError:
            raise InvalidRecordingError(f"unknown label {value!r}") from None


@dataclass(eq=False)
class Recording:
    """Multi-channel EEG recording

    Samples are stored as float32, the payload type of EEGB files, so that a
    write/read cycle reproduces the recording bit for bit.
    """
    subject_id: str
    label: Label
    fs: float
    channels: List[str]
    data: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        self.label = Label.parse(self.label)
        self.fs = float(self.fs)
        self.channels = list(self.channels)
        self.data = np.ascontiguousarray(self.data, dtype=np.float32)
        self.validate()

    def validate(self) -> None:
        """Raise InvalidRecordingError if any invariant fails"""
        if not self.subject_id:
            raise InvalidRecordingError("invalid recording: empty subject id")
        if not np.isfinite(self.fs) or self.fs <= 0:
            raise InvalidRecordingError(f"invalid recording: fs must be positive, got {self.fs}")
        if self.data.ndim != 2:
            raise InvalidRecordingError(f"invalid recording: data must be 2-D, got shape {self.data.shape}")
        if self.data.shape[0] != len(self.channels):
            raise InvalidRecordingError(
                f"invalid recording: {len(self.channels)} channel names for {self.data.shape[0]} rows"
            )
        if self.data.shape[1] == 0:
            raise InvalidRecordingError("invalid recording: no samples")
        if len(set(self.channels)) != len(self.channels):
            raise InvalidRecordingError("invalid recording: duplicate channel names")
        if not np.all(np.isfinite(self.data)):
            raise InvalidRecordingError("invalid recording: NaN or Inf samples")

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.fs

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Recording):
            return NotImplemented
        return (
            self.subject_id == other.subject_id
            and self.label == other.label
            and self.fs == other.fs
            and self.channels == other.channels
            and self.data.shape == other.data.shape
            and self.data.tobytes() == other.data.tobytes()
        )


def _pack_text(text: str) -> bytes:
    raw = text.encode("utf-8")
    if len(raw) > 0xFFFF:
        raise InvalidRecordingError(f"invalid recording: string too long ({len(raw)} bytes)")
    return _LENGTH.pack(len(raw)) + raw


def _remaining(stream: BinaryIO) -> Optional[int]:
    """Bytes left in a seekable stream, None when it cannot seek"""
    try:
        position = stream.tell()
        end = stream.seek(0, os.SEEK_END)
        stream.seek(position)
    except (AttributeError, OSError):
        return None
    return end - position


def read_exact(stream: BinaryIO, n: int, what: str,
               error: Type[TokenEEGError] = RecordingFormatError) -> bytes:
    """Read exactly ``n`` bytes or raise ``error``

    Sizes taken from a corrupt header are checked against the bytes actually
    left in the stream before anything is allocated.
    """
    remaining = _remaining(stream)
    if n < 0 or (remaining is not None and n > remaining):
        raise error(f"truncated file while reading {what}: need {n} bytes, {remaining} left")
    try:
        buf = stream.read(n)
    except (OverflowError, MemoryError) as e:
        raise error(f"truncated file while reading {what}: {e}") from e
    if len(buf) != n:
        raise error(f"truncated file while reading {what}")
    return buf


def decode_text(raw: bytes, what: str, error: Type[TokenEEGError] = RecordingFormatError) -> str:
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError as e:
        raise error(f"{what} is not valid UTF-8: {e}") from e


def _unpack_text(stream: BinaryIO, what: str) -> str:
    (length,) = _LENGTH.unpack(read_exact(stream, _LENGTH.size, what))
    return decode_text(read_exact(stream, length, what), what)


def encode_recording(rec: Recording) -> bytes:
    """Serialize a recording to EEGB v1 bytes"""
    rec.validate()
    header = _FIXED_HEADER.pack(MAGIC, VERSION, rec.fs, rec.n_channels, rec.n_samples, int(rec.label))
    parts = [header, _pack_text(rec.subject_id)]
    parts.extend(_pack_text(name) for name in rec.channels)
    parts.append(rec.data.astype(PAYLOAD_DTYPE, copy=False).tobytes(order="C"))
    return b"".join(parts)


def decode_recording(stream: BinaryIO) -> Recording:
    """Parse one EEGB v1 recording from a binary stream"""
    head = stream.read(_FIXED_HEADER.size)
    if len(head) < len(MAGIC) or head[: len(MAGIC)] != MAGIC:
        raise RecordingFormatError("bad magic: not an EEGB file")
    if len(head) != _FIXED_HEADER.size:
        raise RecordingFormatError("truncated file while reading header")
    _, version, fs, n_channels, n_samples, label = _FIXED_HEADER.unpack(head)
    if version != VERSION:
        raise RecordingFormatError(f"unsupported EEGB version {version}")

    subject_id = _unpack_text(stream, "subject id")
    channels = [_unpack_text(stream, "channel names") for _ in range(n_channels)]
    if len(channels) != n_channels:
        raise RecordingFormatError("channel-count mismatch")

    n_bytes = n_channels * n_samples * PAYLOAD_DTYPE.itemsize
    payload = read_exact(stream, n_bytes, "payload")
    if stream.read(1):
        raise RecordingFormatError("channel-count mismatch: trailing bytes after payload")
    try:
        data = np.frombuffer(payload, dtype=PAYLOAD_DTYPE).reshape(n_channels, n_samples)
        return Recording(subject_id=subject_id, label=label, fs=fs, channels=channels, data=data)
    except (InvalidRecordingError, ValueError, OverflowError) as e:
        raise RecordingFormatError(f"decoded recording is invalid: {e}") from e


def write_recording(rec: Recording, path: Union[str, Path]) -> None:
    """Write a recording as an EEGB v1 file

    Args:
        rec: Recording to store
        path: Destination file; parent directories are created
    """
    blob = encode_recording(rec)
    path = Path(path)
    os.makedirs(path.parent, exist_ok=True)
    with open(path, "wb") as f:
        f.write(blob)
    logger.debug(f"Wrote {rec.subject_id} ({rec.n_channels}x{rec.n_samples}) to {path}")


def read_recording(path: Union[str, Path]) -> Recording:
    """Read an EEGB v1 file"""
    with open(path, "rb") as f:
        return decode_recording(f)
