"""
Dataset manifests: one JSON object per line with subject_id, label and path
"""
import os
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, List, Union

import orjson

from src.eegio.recording import Label, Recording, read_recording
from src.exceptions import InvalidRecordingError, ManifestError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ManifestEntry:
    subject_id: str
    label: Label
    path: Path


class Manifest:
    """Ordered, subject-unique list of recordings"""

    def __init__(self, entries: Iterable[ManifestEntry]) -> None:
        self.entries: List[ManifestEntry] = list(entries)
        seen = set()
        for entry in self.entries:
            if entry.subject_id in seen:
                raise ManifestError(f"duplicate subject id {entry.subject_id!r}")
            seen.add(entry.subject_id)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[ManifestEntry]:
        return iter(self.entries)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Manifest):
            return NotImplemented
        return self.entries == other.entries

    @property
    def subject_ids(self) -> List[str]:
        return [e.subject_id for e in self.entries]

    @property
    def labels(self) -> List[Label]:
        return [e.label for e in self.entries]

    def load(self, entry: ManifestEntry) -> Recording:
        """Read the recording behind an entry and check it agrees with the manifest"""
        rec = read_recording(entry.path)
        if rec.subject_id != entry.subject_id or rec.label != entry.label:
            raise ManifestError(
                f"{entry.path} holds {rec.subject_id}/{rec.label.name}, "
                f"manifest says {entry.subject_id}/{entry.label.name}"
            )
        return rec

    def write(self, path: Union[str, Path]) -> None:
        """Write as JSON-lines; paths are stored relative to the manifest when possible"""
        path = Path(path)
        os.makedirs(path.parent, exist_ok=True)
        base = path.parent.resolve()
        with open(path, "wb") as f:
            for entry in self.entries:
                target = Path(entry.path).resolve()
                try:
                    stored = target.relative_to(base).as_posix()
                except ValueError:
                    stored = target.as_posix()
                f.write(orjson.dumps({
                    "subject_id": entry.subject_id,
                    "label": entry.label.name,
                    "path": stored,
                }))
                f.write(b"\n")
        logger.info(f"Wrote manifest with {len(self)} subjects to {path}")

    @classmethod
    def read(cls, path: Union[str, Path]) -> "Manifest":
        """Parse a JSON-lines manifest; relative paths resolve against its directory"""
        path = Path(path)
        base = path.parent
        entries = []
        with open(path, "rb") as f:
            for lineno, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    obj = orjson.loads(line)
                    entry_path = Path(obj["path"])
                    entries.append(ManifestEntry(
                        subject_id=str(obj["subject_id"]),
                        label=Label.parse(obj["label"]),
                        path=entry_path if entry_path.is_absolute() else base / entry_path,
                    ))
                except (orjson.JSONDecodeError, KeyError, TypeError, InvalidRecordingError) as e:
                    raise ManifestError(f"{path}:{lineno}: {e}") from e
        return cls(entries)

    @classmethod
    def merge(cls, *manifests: "Manifest") -> "Manifest":
        """Concatenate several datasets into one combined manifest"""
        entries: List[ManifestEntry] = []
        for manifest in manifests:
            entries.extend(manifest.entries)
        return cls(entries)
