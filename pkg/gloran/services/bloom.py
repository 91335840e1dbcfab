"""
Bloom filter over integer items.

Uses double hashing from a single 64-bit murmur3 hash: probe i lands on
(h1 + i * h2) mod m, with h1 and h2 the low and high 32-bit halves.
"""

import math
from typing import Iterable, List

import mmh3
import numpy as np


class BloomFilter:
    """Fixed-size Bloom filter backed by a numpy bit array."""

    def __init__(self, num_bits: int, num_hashes: int, seed: int = 0):
        if num_bits < 1:
            raise ValueError("num_bits must be >= 1")
        if num_hashes < 1:
            raise ValueError("num_hashes must be >= 1")
        self.num_bits = num_bits
        self.num_hashes = num_hashes
        self.seed = seed
        self.bits = np.zeros(num_bits, dtype=bool)

    @classmethod
    def for_items(cls, item_count: int, bits_per_item: float, seed: int = 0) -> "BloomFilter":
        """Sized for ``item_count`` items with round(bits * ln 2) hashes."""
        num_bits = max(8, math.ceil(item_count * bits_per_item))
        num_hashes = min(16, max(1, round(bits_per_item * math.log(2))))
        return cls(num_bits, num_hashes, seed)

    def _positions(self, item: int) -> List[int]:
        digest = mmh3.hash64(item.to_bytes(8, "big"), seed=self.seed, signed=False)[0]
        h1 = digest & 0xFFFFFFFF
        h2 = (digest >> 32) | 1
        return [(h1 + i * h2) % self.num_bits for i in range(self.num_hashes)]

    def add(self, item: int) -> None:
        self.bits[self._positions(item)] = True

    def add_many(self, items: Iterable[int]) -> None:
        for item in items:
            self.add(item)

    def __contains__(self, item: int) -> bool:
        return bool(self.bits[self._positions(item)].all())

    @property
    def fill_ratio(self) -> float:
        return float(self.bits.mean())

    @property
    def size_bytes(self) -> int:
        return (self.num_bits + 7) // 8

    def to_bytes(self) -> bytes:
        return np.packbits(self.bits).tobytes()

    @classmethod
    def from_bytes(cls, data: bytes, num_bits: int, num_hashes: int, seed: int = 0) -> "BloomFilter":
        bloom = cls(num_bits, num_hashes, seed)
        unpacked = np.unpackbits(np.frombuffer(data, dtype=np.uint8))
        bloom.bits = unpacked[:num_bits].astype(bool)
        return bloom
