"""Deterministic seed derivation.

One master seed fans out into independent streams through
``numpy.random.SeedSequence`` spawn keys.  Streams are addressed by a
(kind, *indices) path, so adding a method or widening a sweep never
reshuffles the randomness of existing cells.
"""
from __future__ import annotations

import zlib

import numpy as np

# Stream kinds.  Values are arbitrary but frozen: changing them changes
# every derived stream.
DATASET = 1
SPLIT = 2
PERTURB = 3
METHOD = 4
GA = 5
PILOT = 6
CV = 7
ORACLE = 8

MASK64 = (1 << 64) - 1


def name_key(name: str) -> int:
    """Stable 32-bit key for a method or cell name."""
    return zlib.crc32(name.encode("utf-8"))


def child_sequence(master_seed: int, *path: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=master_seed & MASK64, spawn_key=tuple(path))


def derive_rng(master_seed: int, *path: int) -> np.random.Generator:
    """Generator for the stream addressed by ``path`` under ``master_seed``."""
    return np.random.default_rng(child_sequence(master_seed, *path))


def derive_seed(master_seed: int, *path: int) -> int:
    """64-bit seed for handing to components that take a plain integer."""
    return int(child_sequence(master_seed, *path).generate_state(1, np.uint64)[0])
