"""In-memory write buffer."""

import bisect
from typing import Dict, List, Optional

from gloran.models.entry import Entry, RangeTombstone


class Memtable:
    """
    Sorted map key -> newest Entry, plus local range tombstones (LRR mode).

    Holds at most ``capacity`` items counting both entries and range
    tombstones; a later seq for the same key replaces the earlier entry.
    """

    def __init__(self, capacity: int):
        self.capacity = capacity
        self._entries: Dict[int, Entry] = {}
        self._keys: List[int] = []
        self.range_tombstones: List[RangeTombstone] = []
        self._first_seq: Optional[int] = None

    def _note_seq(self, seq: int) -> None:
        if self._first_seq is None or seq < self._first_seq:
            self._first_seq = seq

    def put(self, entry: Entry) -> None:
        self._note_seq(entry.seq)
        if entry.key not in self._entries:
            bisect.insort(self._keys, entry.key)
        self._entries[entry.key] = entry

    def add_range_tombstone(self, tombstone: RangeTombstone) -> None:
        self._note_seq(tombstone.seq)
        bisect.insort(self.range_tombstones, tombstone)

    def get(self, key: int) -> Optional[Entry]:
        return self._entries.get(key)

    def covering_seq(self, key: int) -> int:
        """Largest seq among range tombstones covering key, 0 when none."""
        best = 0
        for tombstone in self.range_tombstones:
            if tombstone.start_key > key:
                break
            if key < tombstone.end_key and tombstone.seq > best:
                best = tombstone.seq
        return best

    def entries(self) -> List[Entry]:
        """Entries sorted by key."""
        return [self._entries[key] for key in self._keys]

    def entries_in_range(self, lo: int, hi: int) -> List[Entry]:
        start = bisect.bisect_left(self._keys, lo)
        end = bisect.bisect_left(self._keys, hi)
        return [self._entries[key] for key in self._keys[start:end]]

    def tombstones_overlapping(self, lo: int, hi: int) -> List[RangeTombstone]:
        return [t for t in self.range_tombstones if t.start_key < hi and t.end_key > lo]

    def min_seq(self) -> Optional[int]:
        """Smallest seq written since the last clear; a lower bound on what is held."""
        return self._first_seq

    def is_full(self) -> bool:
        return len(self) >= self.capacity

    def clear(self) -> None:
        self._entries.clear()
        self._keys.clear()
        self.range_tombstones.clear()
        self._first_seq = None

    @property
    def size_bytes(self) -> int:
        return sum(len(entry.value) + 24 for entry in self._entries.values()) + 24 * len(self.range_tombstones)

    def __len__(self) -> int:
        return len(self._entries) + len(self.range_tombstones)
