"""Seedable, platform-independent random source with buffered uniform draws.

The generator is pinned: PCG64 seeded through ``numpy.random.SeedSequence``.
Every random decision in this package is derived from a stream of float64
uniforms in [0, 1), consumed one at a time. Integer picks in ``range(n)`` are
always ``min(int(u * n), n - 1)``, so a run is reproducible from the seed
alone, independent of whether the stream is consumed in Python or handed to a
compiled kernel in blocks.

Per-trial streams are ``SeedSequence([seed, trial_index])``; single-purpose
runs (e.g. the coupling certificate) use ``SeedSequence([seed])``.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

_DEFAULT_BLOCK = 8192


class RandomSource:
    """Buffered view over a PCG64 uniform stream."""

    __slots__ = ("_gen", "_buf", "_pos", "_block")

    def __init__(self, entropy: int | Sequence[int], block: int = _DEFAULT_BLOCK):
        if isinstance(entropy, int):
            entropy = [entropy]
        for e in entropy:
            if e < 0:
                raise ValueError("seed entropy must be non-negative")
        self._gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(list(entropy))))
        self._buf = np.empty(0, dtype=np.float64)
        self._pos = 0
        self._block = int(block)

    @classmethod
    def for_trial(cls, seed: int, trial: int) -> "RandomSource":
        """Independent stream for one Monte Carlo trial of a seeded experiment."""
        return cls([seed, trial])

    def uniform(self) -> float:
        """Next float64 uniform in [0, 1)."""
        if self._pos >= self._buf.shape[0]:
            self._buf = self._gen.random(self._block)
            self._pos = 0
        v = self._buf[self._pos]
        self._pos += 1
        return float(v)

    def uniform_block(self, n: int) -> np.ndarray:
        """Consume the next ``n`` uniforms as an array (same stream order)."""
        out = np.empty(n, dtype=np.float64)
        avail = self._buf.shape[0] - self._pos
        take = min(avail, n)
        if take > 0:
            out[:take] = self._buf[self._pos : self._pos + take]
            self._pos += take
        if take < n:
            out[take:] = self._gen.random(n - take)
        return out

    # -- kernel interop: kernels read self._buf from self._pos and report back --

    def ensure(self, n: int) -> None:
        """Guarantee at least ``n`` unconsumed uniforms are buffered."""
        avail = self._buf.shape[0] - self._pos
        if avail < n:
            fresh = self._gen.random(max(self._block, n - avail))
            self._buf = np.concatenate([self._buf[self._pos :], fresh])
            self._pos = 0

    @property
    def buffer(self) -> np.ndarray:
        return self._buf

    @property
    def position(self) -> int:
        return self._pos

    def commit(self, pos: int) -> None:
        """Record that a kernel consumed the buffer up to ``pos``."""
        if not 0 <= pos <= self._buf.shape[0]:
            raise ValueError("position outside buffer")
        self._pos = pos


def pick_index(u: float, n: int) -> int:
    """Map one uniform to an index in range(n) (the pinned convention)."""
    i = int(u * n)
    return n - 1 if i >= n else i
