"""
Segment archive: one EEGS tensor file per subject and band plus index.json

EEGS v1 layout (little-endian):
    magic       4 bytes  b"EEGS"
    version     u16
    label       u8
    band        u16 length + UTF-8
    subject_id  u16 length + UTF-8
    n_segments  u32
    n_channels  u16
    length      u32
    payload     n_segments * n_channels * length float32, C order
"""
import io
import logging
import math
import os
import struct
from pathlib import Path
from typing import BinaryIO, List, Optional, Sequence, Tuple, Union

import numpy as np
import orjson

from src.dsp.segmentation import SegmentBatch
from src.eegio.recording import Label, decode_text, read_exact
from src.exceptions import InvalidRecordingError, RecordingFormatError

logger = logging.getLogger(__name__)

MAGIC = b"EEGS"
VERSION = 1
INDEX_NAME = "index.json"
PAYLOAD_DTYPE = np.dtype("<f4")

_HEADER = struct.Struct("<4sHB")
_SHAPE = struct.Struct("<IHI")
_LENGTH = struct.Struct("<H")


def _pack_text(text: str) -> bytes:
    raw = text.encode("utf-8")
    return _LENGTH.pack(len(raw)) + raw


def _unpack_text(stream: BinaryIO, what: str) -> str:
    (n,) = _LENGTH.unpack(read_exact(stream, _LENGTH.size, what))
    return decode_text(read_exact(stream, n, what), what)


def encode_segments(batch: SegmentBatch) -> bytes:
    out = io.BytesIO()
    out.write(_HEADER.pack(MAGIC, VERSION, int(batch.label)))
    out.write(_pack_text(batch.band))
    out.write(_pack_text(batch.subject_id))
    out.write(_SHAPE.pack(*batch.data.shape))
    out.write(np.ascontiguousarray(batch.data, dtype=PAYLOAD_DTYPE).tobytes())
    return out.getvalue()


def decode_segments(stream: BinaryIO) -> SegmentBatch:
    magic, version, label = _HEADER.unpack(read_exact(stream, _HEADER.size, "header"))
    if magic != MAGIC:
        raise RecordingFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise RecordingFormatError(f"unsupported segment file version {version}")
    band = _unpack_text(stream, "band")
    subject_id = _unpack_text(stream, "subject id")
    shape = _SHAPE.unpack(read_exact(stream, _SHAPE.size, "shape"))
    count = math.prod(shape)
    payload = read_exact(stream, count * PAYLOAD_DTYPE.itemsize, "payload")
    if stream.read(1):
        raise RecordingFormatError("trailing bytes after segment payload")
    data = np.frombuffer(payload, dtype=PAYLOAD_DTYPE).reshape(shape).astype(np.float32)
    try:
        return SegmentBatch(data=data, subject_id=subject_id, label=Label.parse(label), band=band)
    except InvalidRecordingError as e:
        raise RecordingFormatError(f"segment file for {subject_id!r} is invalid: {e}") from e


def segment_file_name(batch: SegmentBatch) -> str:
    """File name for one subject and band; ids that would leave the archive directory are refused"""
    subject_id = batch.subject_id
    if subject_id in (".", "..") or any(sep in subject_id for sep in ("/", "\\", "\0")):
        raise InvalidRecordingError(f"invalid recording: subject id {subject_id!r} is not a plain file name")
    return f"{subject_id}.{batch.band}.eegs"


def write_archive(batches: Sequence[SegmentBatch],
                  out_dir: Union[str, Path],
                  skipped: Optional[Sequence[str]] = None) -> Path:
    """Write segment files and an index; returns the index path"""
    out_dir = Path(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    entries = []
    for batch in batches:
        name = segment_file_name(batch)
        with open(out_dir / name, "wb") as f:
            f.write(encode_segments(batch))
        entries.append({
            "subject_id": batch.subject_id,
            "label": batch.label.name,
            "band": batch.band,
            "file": name,
            "n_segments": len(batch),
        })
    index = {
        "version": VERSION,
        "bands": sorted({b.band for b in batches}),
        "subjects": entries,
        "skipped": list(skipped or []),
    }
    index_path = out_dir / INDEX_NAME
    with open(index_path, "wb") as f:
        f.write(orjson.dumps(index, option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS))
    logger.info(f"Wrote {len(entries)} segment files to {out_dir}")
    return index_path


def read_archive(archive_dir: Union[str, Path], band: Optional[str] = None) -> Tuple[List[SegmentBatch], dict]:
    """Load the batches listed in an archive index, optionally for one band only"""
    archive_dir = Path(archive_dir)
    index_path = archive_dir / INDEX_NAME
    try:
        with open(index_path, "rb") as f:
            index = orjson.loads(f.read())
    except orjson.JSONDecodeError as e:
        raise RecordingFormatError(f"{index_path}: {e}") from e
    batches = []
    for entry in index.get("subjects", []):
        if band is not None and entry["band"] != band:
            continue
        with open(archive_dir / entry["file"], "rb") as f:
            batch = decode_segments(f)
        if batch.subject_id != entry["subject_id"] or len(batch) != entry["n_segments"]:
            raise RecordingFormatError(f"{entry['file']} does not match its index entry")
        batches.append(batch)
    return batches, index
