"""Deterministic random stream derivation.

Every randomized operation in the package draws from a numpy Generator built
here. Streams are keyed by (seed, *labels) so that subsystems consume
independent, reproducible sequences regardless of call interleaving, and so
that per-particle streams can be derived from (seed, step, particle_index)
without sharing state.
"""

from __future__ import annotations

import zlib

import numpy as np


def _key_to_int(key: int | str) -> int:
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    return int(key) & 0xFFFFFFFF


def stream(seed: int, *keys: int | str) -> np.random.Generator:
    """Return a Generator for the stream identified by (seed, *keys)."""
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [_key_to_int(k) for k in keys]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
