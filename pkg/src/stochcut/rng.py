"""Seedable counter-based random streams.

Every draw is a pure function of ``(key, counter)``, so a stream can be
reproduced from its key and position alone and the compiled kernels can
replay it exactly. The generator is fixed as follows (all arithmetic mod 2**64):

    counter <- counter + 1
    u       <- key + counter * 0x9E3779B97F4A7C15
    output  <- mix64(mix64(u) + key)

where ``mix64`` is the SplitMix64 finalizer. Keys are derived from a seed by
``mix64(seed ^ SEED_SALT)`` and child streams by :meth:`RngStream.spawn`.

Derived quantities:

* ``random()``: ``(next_u64() >> 11) * 2**-53`` in ``[0, 1)``.
* ``randbelow(n)``: Lemire's multiply-shift on the upper 32 bits with
  rejection, exactly uniform on ``{0..n-1}`` for ``1 <= n < 2**32``.
* ``categorical(cum, last)``: first ``j`` with ``random() < cum[j]``,
  ``last`` if rounding leaves none.
* ``multinomial``: ``total`` sequential categorical draws.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

MASK64 = (1 << 64) - 1
MASK32 = (1 << 32) - 1
GOLDEN = 0x9E3779B97F4A7C15
SEED_SALT = 0x5851F42D4C957F2D
SPAWN_GAMMA = 0xD1B54A32D192ED03
_TWO_NEG_53 = 1.0 / 9007199254740992.0


def mix64(z: int) -> int:
    """SplitMix64 output finalizer."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def _path_word(item) -> int:
    if isinstance(item, str):
        word = 0
        for byte in item.encode("utf-8"):
            word = mix64(word ^ byte)
        return word
    return int(item) & MASK64


class RngStream:
    """A position in a counter-based random stream.

    Parameters
    ----------
    seed : int
        Any integer; reduced mod 2**64 and scrambled into the stream key.
    """

    __slots__ = ("key", "counter")

    def __init__(self, seed: int = 0):
        self.key = mix64((int(seed) & MASK64) ^ SEED_SALT)
        self.counter = 0

    @classmethod
    def from_key(cls, key: int, counter: int = 0) -> "RngStream":
        stream = cls.__new__(cls)
        stream.key = key & MASK64
        stream.counter = counter & MASK64
        return stream

    def spawn(self, *path) -> "RngStream":
        """Child stream addressed by ``path`` (ints or strings).

        The child depends only on this stream's key, never on its counter, so
        ``spawn(i, t)`` is stable no matter how many draws were taken.
        """
        key = self.key
        for item in path:
            key = mix64(mix64(key + (_path_word(item) + 1) * SPAWN_GAMMA) ^ key)
        return RngStream.from_key(key)

    def copy(self) -> "RngStream":
        return RngStream.from_key(self.key, self.counter)

    def __eq__(self, other):
        if not isinstance(other, RngStream):
            return NotImplemented
        return self.key == other.key and self.counter == other.counter

    def __repr__(self):
        return f"RngStream(key=0x{self.key:016x}, counter={self.counter})"

    def next_u64(self) -> int:
        self.counter = (self.counter + 1) & MASK64
        u = (self.key + self.counter * GOLDEN) & MASK64
        return mix64(mix64(u) + self.key)

    def random(self) -> float:
        return (self.next_u64() >> 11) * _TWO_NEG_53

    def randbelow(self, n: int) -> int:
        if not 1 <= n <= MASK32:
            raise ValueError(f"randbelow bound out of range: {n}")
        m = (self.next_u64() >> 32) * n
        low = m & MASK32
        if low < n:
            threshold = ((1 << 32) - n) % n
            while low < threshold:
                m = (self.next_u64() >> 32) * n
                low = m & MASK32
        return m >> 32

    def integers(self, low: int, high: int) -> int:
        """Uniform integer on the closed range ``[low, high]``."""
        return low + self.randbelow(high - low + 1)

    def categorical(self, cum: Sequence[float], last: int) -> int:
        u = self.random()
        for j, c in enumerate(cum):
            if u < c:
                return j
        return last

    def multinomial(self, total: int, probs) -> np.ndarray:
        cum, last = cumulative(probs)
        out = np.zeros(len(cum), dtype=np.int64)
        for _ in range(total):
            out[self.categorical(cum, last)] += 1
        return out

    def normal(self) -> float:
        """Standard normal by Box-Muller (one variate per two uniforms)."""
        u1 = 1.0 - self.random()
        u2 = self.random()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


def cumulative(probs) -> tuple[list[float], int]:
    """Sequential running sums of ``probs`` and the last index with mass.

    The sums are accumulated left to right in double precision; the compiled
    kernels rebuild them the same way.
    """
    cum = []
    acc = 0.0
    last = -1
    for j, p in enumerate(probs):
        p = float(p)
        acc += p
        cum.append(acc)
        if p > 0.0:
            last = j
    if last < 0:
        raise ValueError("probability vector has no positive entry")
    return cum, last
