"""Dataset preprocessing and the on-disk segment archive"""
from src.pipeline.archive import read_archive, write_archive
from src.pipeline.preprocess import preprocess_manifest, preprocess_recording, stack_batches

__all__ = [
    "read_archive",
    "write_archive",
    "preprocess_manifest",
    "preprocess_recording",
    "stack_batches",
]
