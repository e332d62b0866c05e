"""Deterministic sub-seed derivation."""

import zlib

import numpy as np


def derive_seed(master: int, tag: str, *index: int) -> int:
    """Map (master seed, role tag, indices) to a 32-bit seed.

    Independent of call order, so sub-tasks can be evaluated in any order
    and still reproduce the same streams.
    """
    if master < 0:
        raise ValueError("seeds must be non-negative")
    key = (zlib.crc32(tag.encode("utf-8")), *(int(i) for i in index))
    ss = np.random.SeedSequence(entropy=int(master), spawn_key=key)
    return int(ss.generate_state(1, dtype=np.uint32)[0])
