"""Deterministic keyed RNG substreams.

Every stochastic component draws its noise from a stream keyed by integer
labels (seed, sweep, trajectory, ...) instead of sharing one sequential
generator.  Draws therefore depend only on the key tuple, never on
scheduling or worker count.
"""
from __future__ import annotations

import zlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _as_label(x) -> int:
    if isinstance(x, (int, np.integer)):
        return int(x) & _MASK64
    if isinstance(x, str):
        return zlib.crc32(x.encode("utf-8"))
    raise TypeError(f"stream labels must be int or str, got {type(x).__name__}")


class RngStream:
    """A node in a tree of independent random streams.

    ``child(*labels)`` derives a sub-stream; ``generator()`` yields the
    ``numpy.random.Generator`` for this node.  Identical (seed, label path)
    always produces identical draws.
    """

    __slots__ = ("seed", "key")

    def __init__(self, seed: int, _key: tuple = ()):
        self.seed = _as_label(seed)
        self.key = tuple(_as_label(k) for k in _key)

    def child(self, *labels) -> "RngStream":
        return RngStream(self.seed, self.key + labels)

    def generator(self) -> np.random.Generator:
        entropy = (self.seed,) + self.key
        return np.random.default_rng(np.random.SeedSequence(entropy))

    def substream(self, *labels) -> np.random.Generator:
        """Generator for the child stream at ``labels``."""
        return self.child(*labels).generator()

    def __repr__(self) -> str:  # pragma: no cover
        return f"RngStream(seed={self.seed}, key={self.key})"
