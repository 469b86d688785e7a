"""
Seeded random streams.

One root seed fans out into independent generators keyed by a fixed stream
offset plus optional sub-keys (epoch, sample index, ...).
"""

from enum import IntEnum

import numpy as np


class Stream(IntEnum):
    PARAMS = 0
    PROTOTYPES = 1
    SYNTH = 2
    SHUFFLE = 3
    GRADCHECK = 4
    BENCH = 5


def generator(seed: int, stream: Stream, *keys: int) -> np.random.Generator:
    """Independent generator for ``(seed, stream, *keys)``."""
    sequence = np.random.SeedSequence(int(seed), spawn_key=(int(stream),) + tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(sequence))
