"""Seed splitting.

Every random stream is keyed by ``(seed, stream name, index)``: the name is
hashed with CRC-32 and passed, together with the index, as the spawn key of a
``numpy.random.SeedSequence`` whose entropy is the run seed. Streams therefore
do not depend on how many other streams were created or in which order.
"""

from __future__ import annotations

import zlib

import numpy as np


def stream(seed: int, name: str, index: int = 0) -> np.random.Generator:
    key = (zlib.crc32(name.encode()), int(index))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=key)))


def trajectory_streams(seed: int, name: str, n: int) -> list[np.random.Generator]:
    return [stream(seed, name, i) for i in range(n)]
