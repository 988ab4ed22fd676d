"""
Counter-based random streams keyed by (seed, stream id)

Every consumer of randomness asks for its own stream, e.g.
``stream(seed, "dropout", repeat, fold, epoch, batch)``. The Philox generator
is keyed by a SeedSequence built from the seed and the stream ids, so a
stream's draws never depend on which other streams were used before it.
"""
import zlib
from typing import Union

import numpy as np

StreamKey = Union[int, str]


def _key_words(keys) -> list:
    words = []
    for key in keys:
        if isinstance(key, str):
            words.append(zlib.crc32(key.encode("utf-8")))
        else:
            words.append(int(key) & 0xFFFFFFFFFFFFFFFF)
    return words


def seed_sequence(seed: int, *keys: StreamKey) -> np.random.SeedSequence:
    """SeedSequence for the stream identified by ``keys`` under ``seed``"""
    return np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *_key_words(keys)])


def stream(seed: int, *keys: StreamKey) -> np.random.Generator:
    """Independent Philox generator for one purpose"""
    return np.random.Generator(np.random.Philox(seed_sequence(seed, *keys)))


def derive_seed(seed: int, *keys: StreamKey) -> int:
    """Child 63-bit seed, for handing a stream to code that takes an int"""
    return int(seed_sequence(seed, *keys).generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
