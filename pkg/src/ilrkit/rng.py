"""Seeded, platform-independent random number generation.

Every stochastic choice in the workbench flows through this module so that
runs replay identically on any platform. Two primitives are exposed:

* ``derive_seed(master, *parts)`` splits a master seed into independent
  streams, one per (stage, index, ...) tag tuple, by hashing a canonical
  encoding of the parts with SHA-256.
* ``SplitMix64`` is the stream generator itself (Steele et al.'s splitmix64
  step function), used for shuffles, uniform draws, and bounded integers.

The same splitmix64 step and FNV-1a string hash are re-implemented by the
generation sidecar, which is why they are pinned here rather than delegated
to ``random`` or NumPy's generators.
"""

from __future__ import annotations

import hashlib

MASK64 = (1 << 64) - 1

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def fnv1a64(text: str) -> int:
    """64-bit FNV-1a hash of the UTF-8 encoding of ``text``."""
    h = _FNV_OFFSET
    for b in text.encode("utf-8"):
        h ^= b
        h = (h * _FNV_PRIME) & MASK64
    return h


SEED_BITS = 48  # derived seeds fit exactly in a JSON/IEEE-754 number
SEED_MASK = (1 << SEED_BITS) - 1


def derive_seed(master: int, *parts: str | int) -> int:
    """Derive an independent 48-bit stream seed from a master seed.

    Parts are encoded unambiguously (tag byte + length-prefixed UTF-8 for
    strings, tag byte + 8-byte little-endian for integers) and hashed with
    SHA-256 together with the master seed; the first digest bytes form the
    derived seed. Seeds are capped at 48 bits so they survive a round-trip
    through JSON numbers in the generation wire protocol.
    """
    h = hashlib.sha256()
    h.update((master & MASK64).to_bytes(8, "little"))
    for part in parts:
        if isinstance(part, bool):
            raise TypeError("bool seed parts are ambiguous")
        if isinstance(part, int):
            h.update(b"i")
            h.update((part & MASK64).to_bytes(8, "little"))
        elif isinstance(part, str):
            data = part.encode("utf-8")
            h.update(b"s")
            h.update(len(data).to_bytes(4, "little"))
            h.update(data)
        else:
            raise TypeError(f"unsupported seed part type: {type(part)!r}")
    return int.from_bytes(h.digest()[:8], "little") & SEED_MASK


class SplitMix64:
    """splitmix64 stream with draw helpers.

    ``randbelow`` uses rejection sampling, so results are exactly uniform
    and reproducible independent of platform word size.
    """

    def __init__(self, seed: int):
        self._state = seed & MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return (z ^ (z >> 31)) & MASK64

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        if n <= 0:
            raise ValueError("randbelow needs n >= 1")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            r = self.next_u64()
            if r < limit:
                return r % n

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        """Uniform float in [lo, hi)."""
        return lo + (hi - lo) * (self.next_u64() / 2.0**64)

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]
