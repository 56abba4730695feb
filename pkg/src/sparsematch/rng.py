"""Deterministic, splittable random streams.

Every source of randomness in the library flows through an :class:`RngStream`
keyed by ``(seed, stream_id)``.  Streams backed by the counter-based Philox
generator reproduce identical draw sequences for identical keys, so trials,
arrivals and learning phases can be run in any order (or in parallel) without
sharing generator state.
"""

from __future__ import annotations

import zlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _splitmix64(value: int) -> int:
    # Finalizer from the splitmix64 generator; good 64-bit avalanche.
    value = (value + 0x9E3779B97F4A7C15) & _MASK64
    z = value
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def _tag_to_int(tag: int | str) -> int:
    if isinstance(tag, str):
        # crc32 is stable across runs and platforms (unlike hash()).
        return zlib.crc32(tag.encode("utf-8")) & _MASK64
    return int(tag) & _MASK64


class RngStream:
    """A named random stream, reproducible from its ``(seed, stream_id)`` key.

    The underlying generator is created lazily and then consumed statefully:
    repeated draws continue one deterministic sequence.  Derive independent
    child streams with :meth:`substream`; children never share state with the
    parent or with each other.
    """

    __slots__ = ("seed", "stream_id", "_generator")

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed) & _MASK64
        self.stream_id = int(stream_id) & _MASK64
        self._generator: np.random.Generator | None = None

    @property
    def generator(self) -> np.random.Generator:
        if self._generator is None:
            bitgen = np.random.Philox(key=[self.seed, self.stream_id])
            self._generator = np.random.Generator(bitgen)
        return self._generator

    def substream(self, *tags: int | str) -> "RngStream":
        """Derive an independent stream keyed by this stream plus ``tags``."""
        sid = self.stream_id
        for tag in tags:
            sid = _splitmix64(sid ^ _splitmix64(_tag_to_int(tag)))
        return RngStream(self.seed, sid)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"
