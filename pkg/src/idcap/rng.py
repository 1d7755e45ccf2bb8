"""Deterministic, splittable random streams on top of the Philox generator.

Every stochastic operation in the package draws from a stream derived from a
master seed plus a (purpose, index) label.  Streams are independent of the
order in which they are opened, so trial-level parallelism cannot change
results.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

_UINT64_MAX = (1 << 64) - 1


@dataclass(frozen=True)
class Seed:
    """Master seed for a family of named substreams.

    Substream keys are SHA-256(master ":" purpose ":" index) truncated to
    128 bits and fed to the counter-based Philox generator, so identical
    (master, purpose, index) triples always reproduce the same draws.
    """

    master: int = 0

    def __post_init__(self):
        if not isinstance(self.master, int) or isinstance(self.master, bool):
            raise TypeError(f"seed must be an integer, got {type(self.master).__name__}")
        if not 0 <= self.master <= _UINT64_MAX:
            raise ValueError(f"seed must fit in 64 unsigned bits, got {self.master}")

    def stream(self, purpose: str, index: int = 0) -> np.random.Generator:
        """Open the substream labeled (purpose, index)."""
        digest = hashlib.sha256(
            f"{self.master}:{purpose}:{index}".encode("utf-8")
        ).digest()
        key = int.from_bytes(digest[:16], "little")
        return np.random.Generator(np.random.Philox(key=key))


def as_seed(seed: Seed | int) -> Seed:
    """Coerce a bare integer to a Seed; pass Seed instances through."""
    if isinstance(seed, Seed):
        return seed
    return Seed(seed)
