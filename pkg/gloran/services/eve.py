"""
Entry validity estimator.

A range-aware estimator (RAE) maps keys onto a virtual bit array of U / w
positions, one per key segment of width w, and stores the positions touched
by deleted ranges in a Bloom filter. A negative probe proves that no range
recorded in the RAE covers the key.

The estimator chains RAEs by sequence epoch. The newest RAE is active;
when it reaches capacity it becomes static and a new active RAE with twice
the capacity is appended. Queries walk newest to oldest and stop once the
RAE's newest range is not newer than the entry.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional

from gloran.services.bloom import BloomFilter

logger = logging.getLogger(__name__)

# expected segments touched per range, used to size the Bloom filter
SEGMENTS_PER_RANGE = 2


class Verdict(str, Enum):
    MAYBE_DELETED = "maybe_deleted"
    DEFINITELY_VALID = "definitely_valid"


class RAEState(str, Enum):
    ACTIVE = "active"
    STATIC = "static"


@dataclass
class RAE:
    """One Bloom-backed estimator over segment positions."""
    epoch: int
    capacity: int
    segment_width: int
    bloom: BloomFilter
    count: int = 0
    insertions: int = 0
    seq_min: int = 0
    seq_max: int = 0
    state: RAEState = RAEState.ACTIVE

    @classmethod
    def create(cls, epoch: int, capacity: int, segment_width: int, bits_per_record: float) -> "RAE":
        num_bits = max(8, math.ceil(capacity * bits_per_record * SEGMENTS_PER_RANGE))
        num_hashes = min(16, max(1, round(num_bits / (capacity * SEGMENTS_PER_RANGE) * math.log(2))))
        return cls(epoch, capacity, segment_width, BloomFilter(num_bits, num_hashes, seed=epoch))

    def position(self, key: int) -> int:
        return key // self.segment_width

    @property
    def is_full(self) -> bool:
        return self.count >= self.capacity

    def insert(self, lo: int, hi: int, seq: int) -> int:
        """Record [lo, hi); returns the number of positions inserted."""
        if self.state != RAEState.ACTIVE:
            raise ValueError(f"RAE epoch {self.epoch} is static")
        first, last = self.position(lo), self.position(hi - 1)
        for p in range(first, last + 1):
            self.bloom.add(p)
        self.count += 1
        self.insertions += last - first + 1
        self.seq_min = seq if self.count == 1 else min(self.seq_min, seq)
        self.seq_max = max(self.seq_max, seq)
        return last - first + 1

    def query(self, key: int) -> Verdict:
        if self.count == 0:
            return Verdict.DEFINITELY_VALID
        if self.position(key) in self.bloom:
            return Verdict.MAYBE_DELETED
        return Verdict.DEFINITELY_VALID


def rae_insert(r: RAE, lo: int, hi: int, seq: int = 0) -> int:
    return r.insert(lo, hi, seq)


def rae_query(r: RAE, key: int) -> Verdict:
    return r.query(key)


class EVE:
    """Chain of RAEs, oldest first; exactly one active RAE at the tail."""

    def __init__(self, first_capacity: int, segment_width: int, bits_per_record: float):
        self.first_capacity = first_capacity
        self.segment_width = segment_width
        self.bits_per_record = bits_per_record
        self.chain: List[RAE] = [RAE.create(0, first_capacity, segment_width, bits_per_record)]
        self.probes = 0

    @property
    def active(self) -> RAE:
        return self.chain[-1]

    def insert(self, lo: int, hi: int, seq: int) -> None:
        active = self.active
        if seq < active.seq_max:
            raise ValueError(f"seq {seq} is older than {active.seq_max}")
        if active.is_full:
            active.state = RAEState.STATIC
            active = RAE.create(active.epoch + 1, active.capacity * 2, self.segment_width, self.bits_per_record)
            self.chain.append(active)
            logger.debug(f"EVE epoch {active.epoch} started with capacity {active.capacity}")
        active.insert(lo, hi, seq)

    def query(self, key: int, entry_seq: int) -> Verdict:
        """MaybeDeleted on the first positive probe among RAEs newer than the entry."""
        for rae in reversed(self.chain):
            if rae.count == 0:
                continue
            if rae.seq_max <= entry_seq:
                return Verdict.DEFINITELY_VALID
            self.probes += 1
            if rae.query(key) == Verdict.MAYBE_DELETED:
                return Verdict.MAYBE_DELETED
        return Verdict.DEFINITELY_VALID

    def drop_outdated(self, watermark: int) -> int:
        """Remove static RAEs whose newest range is at or below the watermark."""
        kept = [r for r in self.chain if r.state == RAEState.ACTIVE or r.seq_max > watermark]
        dropped = len(self.chain) - len(kept)
        self.chain = kept
        if dropped:
            logger.info(f"EVE dropped {dropped} outdated estimators at watermark {watermark}")
        return dropped

    @property
    def size_bytes(self) -> int:
        return sum(r.bloom.size_bytes for r in self.chain)

    def to_dict(self) -> Dict[str, object]:
        return {
            "estimators": len(self.chain),
            "records": sum(r.count for r in self.chain),
            "bytes": self.size_bytes,
            "probes": self.probes,
        }


def eve_insert(eve: EVE, lo: int, hi: int, seq: int) -> None:
    eve.insert(lo, hi, seq)


def eve_query(eve: EVE, key: int, entry_seq: int) -> Verdict:
    return eve.query(key, entry_seq)


def eve_drop_outdated(eve: EVE, watermark: int) -> int:
    return eve.drop_outdated(watermark)


def build_estimator(first_capacity: int, segment_width: int, bits_per_record: float,
                    seed_areas: Optional[list] = None) -> EVE:
    """
    Fresh estimator, optionally replaying (lo, hi, seq) triples in seq order.

    Fragments of one range share a seq and are all inserted.
    """
    eve = EVE(first_capacity, segment_width, bits_per_record)
    for lo, hi, seq in sorted(seed_areas or [], key=lambda t: t[2]):
        eve.insert(lo, hi, seq)
    return eve
