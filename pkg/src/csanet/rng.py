"""Seed fan-out: one global seed derives independent named substreams.

A run owns a single integer seed. Every randomized component (weight init,
dropout, augmentation, batch shuffling, data synthesis) pulls from its own
named stream so that adding draws to one component never shifts another.
The derivation is fixed: the substream seed is the first 8 bytes
(little-endian) of sha256("<seed>:<name>").
"""

import hashlib

import numpy as np

# Stream names used by the training harness.
STREAM_INIT = "init"
STREAM_DROPOUT = "dropout"
STREAM_AUGMENT = "augment"
STREAM_SHUFFLE = "shuffle"
STREAM_SYNTH = "synth"


def substream_seed(seed: int, name: str) -> int:
    """Derive a 64-bit substream seed from the run seed and a stream name."""
    digest = hashlib.sha256(f"{seed}:{name}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def substream(seed: int, name: str) -> np.random.Generator:
    """A fresh, deterministic Generator for the named stream."""
    return np.random.Generator(np.random.PCG64(substream_seed(seed, name)))
