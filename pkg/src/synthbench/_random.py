"""Seeding helpers.

All randomness flows through numpy's PCG64 bit generator (PCG XSL RR 128/64)
seeded via ``SeedSequence``. Sub-seeds are derived from a root seed plus a
path of string/int keys, so every stage of a run is reproducible from one
integer and independent of execution order or worker count.
"""

from __future__ import annotations

import zlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _key_to_int(key) -> int:
    if isinstance(key, (int, np.integer)):
        if key < 0:
            raise ValueError("seed keys must be non-negative")
        return int(key)
    return zlib.crc32(str(key).encode("utf-8"))


def seed_sequence(seed: int, *keys) -> np.random.SeedSequence:
    if not 0 <= int(seed) <= _MASK64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return np.random.SeedSequence(int(seed), spawn_key=tuple(_key_to_int(k) for k in keys))


def make_rng(seed: int, *keys) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed_sequence(seed, *keys)))


def derive_seed(seed: int, *keys) -> int:
    """A 64-bit child seed of ``seed`` for the given key path."""
    return int(seed_sequence(seed, *keys).generate_state(1, dtype=np.uint64)[0])
