"""Named random substreams derived from one 64-bit run seed.

Each consumer of randomness (weight init, epoch shuffling, mixup draws,
dataset synthesis) gets its own counter-based generator keyed by
(seed, substream name), so toggling one consumer never perturbs the
others.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def substream(seed: int, name: str) -> np.random.Generator:
    """Independent generator for (seed, name), stable across processes."""
    tag = int.from_bytes(hashlib.sha256(name.encode("utf-8")).digest()[:8], "little")
    key = np.array([seed & _MASK64, tag], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
