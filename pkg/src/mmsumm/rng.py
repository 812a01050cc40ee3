"""Named random streams derived from one 64-bit seed.

``stream(seed, name)`` builds a PCG64 generator from
``SeedSequence(entropy=seed, spawn_key=(crc32(name),))``. Streams with
different names are statistically independent and each is reproducible on
its own, so adding a consumer never shifts another consumer's draws. Nothing
in the package touches numpy's global RNG.
"""

from __future__ import annotations

import zlib

import numpy as np

from . import errors

SEED_MAX = 2**64 - 1


def stream(seed: int, name: str) -> np.random.Generator:
    if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool) or not 0 <= seed <= SEED_MAX:
        raise errors.ValidationError(f"seed must be an integer in [0, 2**64), got {seed!r}")
    key = zlib.crc32(name.encode("utf-8"))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(key,))))
