"""
Leveling LSM-tree.

Memtable of F items on top of one sorted run per level, level i holding at
most F * T^i entries. Flushes merge into level 1 and overflowing levels
cascade downward. Point-delete strategies (DECOMP, SCAN_DELETE,
LOOKUP_DELETE) and local range tombstones (LRR) are handled here; GLORAN
range deletes belong to the engine, which hooks into compaction through
``compaction_filter`` and ``on_bottommost_compaction``.
"""

import heapq
import logging
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Tuple

from gloran.models.config import Strategy, StoreConfig, format_flat_file, parse_flat_file
from gloran.models.entry import (
    DELETED_BY_RANGE,
    NOT_FOUND,
    Entry,
    LookupResult,
    RangeTombstone,
    resolve,
)
from gloran.services.block_device import BlockDevice
from gloran.services.memtable import Memtable
from gloran.services.sequence import SequenceCounter
from gloran.services.sorted_run import SortedRun
from gloran.utils.error_handling import (
    ErrorContext,
    InvalidRangeError,
    StorageError,
    ValueTooLargeError,
)

logger = logging.getLogger(__name__)

MANIFEST_NAME = "MANIFEST"
CONFIG_NAME = "config.txt"

KeySpan = Tuple[int, int]
CompactionFilter = Callable[[List[Entry], KeySpan], List[Entry]]
CompactionListener = Callable[[KeySpan], None]


@dataclass
class LsmStats:
    """Counters gathered by lookups and compactions."""
    flushes: int = 0
    compactions: int = 0
    bottommost_compactions: int = 0
    bloom_negatives: int = 0
    bloom_false_positives: int = 0
    range_records_examined: int = 0
    range_tombstone_probes: int = 0

    @property
    def bloom_fpr(self) -> Optional[float]:
        """Measured false positive rate over probes of absent keys."""
        absent = self.bloom_negatives + self.bloom_false_positives
        return self.bloom_false_positives / absent if absent else None

    def to_dict(self) -> Dict[str, float]:
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        data["bloom_fpr"] = self.bloom_fpr
        return data


class TombstoneSweep:
    """
    Answers "largest covering range tombstone seq" for keys visited in
    ascending order, using a max-heap of active tombstones keyed by seq.
    """

    def __init__(self, tombstones: Iterable[RangeTombstone]):
        self._pending = sorted(tombstones)
        self._next = 0
        self._active: List[Tuple[int, int]] = []

    def covering_seq(self, key: int) -> int:
        while self._next < len(self._pending) and self._pending[self._next].start_key <= key:
            tombstone = self._pending[self._next]
            heapq.heappush(self._active, (-tombstone.seq, tombstone.end_key))
            self._next += 1
        while self._active and self._active[0][1] <= key:
            heapq.heappop(self._active)
        return -self._active[0][0] if self._active else 0

    def purge(self, entries: Iterable[Entry]) -> List[Entry]:
        """Drop entries older than a covering tombstone. Entries must be key-sorted."""
        return [e for e in entries if e.seq > self.covering_seq(e.key)]


def merge_newest(runs: Iterable[Iterable[Entry]]) -> List[Entry]:
    """Merge key-sorted entry streams keeping only the newest version per key."""
    merged: List[Entry] = []
    for entry in heapq.merge(*runs, key=lambda e: (e.key, -e.seq)):
        if merged and merged[-1].key == entry.key:
            continue
        merged.append(entry)
    return merged


def coalesce_tombstones(tombstones: Iterable[RangeTombstone]) -> List[RangeTombstone]:
    return sorted(set(tombstones))


def _keyspan(runs: List[List[Entry]], tombstones: List[RangeTombstone]) -> KeySpan:
    """Half-open key range touched by a merge."""
    lows = [run[0].key for run in runs if run] + [t.start_key for t in tombstones]
    highs = [run[-1].key + 1 for run in runs if run] + [t.end_key for t in tombstones]
    if not lows:
        return (0, 0)
    return (min(lows), max(highs))


class LsmStore:
    """One writer, synchronous flush and compaction."""

    def __init__(
        self,
        root: Path,
        config: StoreConfig,
        device: Optional[BlockDevice] = None,
        sequencer: Optional[SequenceCounter] = None,
        compaction_filter: Optional[CompactionFilter] = None,
        on_bottommost_compaction: Optional[CompactionListener] = None,
    ):
        self.root = Path(root)
        self.config = config
        self.device = device or BlockDevice(config.block_size)
        self.sequencer = sequencer or SequenceCounter()
        self.compaction_filter = compaction_filter
        self.on_bottommost_compaction = on_bottommost_compaction
        self.memtable = Memtable(config.memtable_capacity)
        self.levels: List[Optional[SortedRun]] = [None]
        self.stats = LsmStats()
        self.closed = False

    @property
    def strategy(self) -> Strategy:
        return self.config.strategy

    # Persistence

    def run_path(self, level: int) -> Path:
        return self.root / f"sst_{level}.run"

    def manifest_entries(self) -> Dict[str, str]:
        entries = {"next_seq": str(self.sequencer.current + 1)}
        for level, run in enumerate(self.levels):
            if run is not None:
                entries[f"lsm.level.{level}"] = run.path.name
        return entries

    def restore(self, manifest: Dict[str, str]) -> None:
        """Reopen runs and the sequence counter listed in a manifest."""
        self.sequencer = SequenceCounter(int(manifest.get("next_seq", "1")) - 1)
        for key, name in manifest.items():
            if not key.startswith("lsm.level."):
                continue
            level = int(key.rsplit(".", 1)[1])
            self._ensure_level(level)
            self.levels[level] = SortedRun.open(self.root / name, self.config, self.device)

    def write_manifest(self, extra: Optional[Dict[str, str]] = None) -> None:
        entries = self.manifest_entries()
        entries.update(extra or {})
        path = self.root / MANIFEST_NAME
        with ErrorContext("write manifest", path=path):
            tmp = path.with_name(MANIFEST_NAME + ".tmp")
            tmp.write_text(format_flat_file(entries), encoding="utf-8")
            tmp.replace(path)

    @staticmethod
    def read_manifest(root: Path) -> Optional[Dict[str, str]]:
        path = Path(root) / MANIFEST_NAME
        if not path.exists():
            return None
        with ErrorContext("read manifest", path=path):
            text = path.read_text(encoding="utf-8")
        return parse_flat_file(text, source=str(path))

    # Level bookkeeping

    def _ensure_level(self, level: int) -> None:
        while len(self.levels) <= level:
            self.levels.append(None)

    def run_at(self, level: int) -> Optional[SortedRun]:
        return self.levels[level] if level < len(self.levels) else None

    def runs(self) -> List[SortedRun]:
        """Non-empty runs, newest level first."""
        return [run for run in self.levels if run is not None]

    def deepest_level(self) -> int:
        for level in range(len(self.levels) - 1, 0, -1):
            if self.levels[level] is not None:
                return level
        return 0

    def is_bottommost(self, level: int) -> bool:
        return all(run is None for run in self.levels[level + 1:])

    @property
    def level_count(self) -> int:
        return self.deepest_level()

    def oldest_sequence(self) -> int:
        """Smallest seq physically present anywhere in the tree."""
        candidates = [run.min_seq for run in self.runs() if run.min_seq]
        memtable_min = self.memtable.min_seq()
        if memtable_min is not None:
            candidates.append(memtable_min)
        return min(candidates, default=self.sequencer.current + 1)

    def min_sequence_above_bottom(self) -> Optional[int]:
        """Smallest seq in the memtable and in every level above the deepest one."""
        deepest = self.deepest_level()
        candidates = [
            run.min_seq for level, run in enumerate(self.levels)
            if run is not None and level < deepest
        ]
        memtable_min = self.memtable.min_seq()
        if memtable_min is not None:
            candidates.append(memtable_min)
        return min(candidates, default=None)

    # Writes

    def _check_open(self) -> None:
        if self.closed:
            raise StorageError("store is closed")

    def _check_key(self, key: int) -> None:
        if not 0 <= key < self.config.universe:
            raise InvalidRangeError(
                f"key {key} outside universe [0, {self.config.universe})", details={"key": key}
            )

    def _check_range(self, lo: int, hi: int) -> None:
        if lo >= hi:
            raise InvalidRangeError(f"empty range [{lo}, {hi})", details={"lo": lo, "hi": hi})
        if lo < 0 or hi > self.config.universe:
            raise InvalidRangeError(
                f"range [{lo}, {hi}) outside universe [0, {self.config.universe})",
                details={"lo": lo, "hi": hi}
            )

    def _write(self, entry: Entry) -> None:
        self.memtable.put(entry)
        if self.memtable.is_full():
            self.flush()

    def put(self, key: int, value: bytes) -> int:
        """Insert a value; returns its seq."""
        self._check_open()
        self._check_key(key)
        if len(value) > self.config.value_size:
            raise ValueTooLargeError(
                f"value of {len(value)} bytes exceeds slot of {self.config.value_size}",
                details={"key": key, "limit": self.config.value_size}
            )
        seq = self.sequencer.next_sequence()
        self._write(Entry.put(key, seq, value))
        return seq

    def delete(self, key: int) -> int:
        """Insert a point tombstone; returns its seq."""
        self._check_open()
        self._check_key(key)
        seq = self.sequencer.next_sequence()
        self._write(Entry.tombstone(key, seq))
        return seq

    def range_delete(self, lo: int, hi: int) -> int:
        """
        Delete every key in [lo, hi) using the configured strategy.

        Returns the number of sequence numbers consumed.

        Raises:
            InvalidRangeError: If lo >= hi, the range leaves the universe, or
                a DECOMP expansion exceeds max_range_expansion
        """
        self._check_open()
        self._check_range(lo, hi)
        strategy = self.strategy

        if strategy == Strategy.DECOMP:
            if hi - lo > self.config.max_range_expansion:
                raise InvalidRangeError(
                    f"range of {hi - lo} keys exceeds max_range_expansion "
                    f"{self.config.max_range_expansion}",
                    details={"lo": lo, "hi": hi}
                )
            for key in range(lo, hi):
                self.delete(key)
            return hi - lo

        if strategy == Strategy.LOOKUP_DELETE:
            deleted = 0
            for key in range(lo, hi):
                if self.get(key).found:
                    self.delete(key)
                    deleted += 1
            return deleted

        if strategy == Strategy.SCAN_DELETE:
            live = self.scan(lo, hi)
            for key, _ in live:
                self.delete(key)
            return len(live)

        if strategy == Strategy.LRR:
            seq = self.sequencer.next_sequence()
            self.memtable.add_range_tombstone(RangeTombstone(lo, hi, seq))
            if self.memtable.is_full():
                self.flush()
            return 1

        raise StorageError("GLORAN range deletes are handled by the global index")

    # Flush and compaction

    def flush(self) -> None:
        """Write the memtable into level 1, then cascade overflowing levels."""
        self._check_open()
        if len(self.memtable) == 0:
            return
        entries = self.memtable.entries()
        tombstones = list(self.memtable.range_tombstones)
        logger.debug(f"flush: {len(entries)} entries, {len(tombstones)} range tombstones")
        # detached first so the bottommost listener sees post-merge state
        self.memtable.clear()
        self._merge_into(1, entries, tombstones)
        self.stats.flushes += 1
        self._cascade(1)

    def compact(self, level: int) -> None:
        """Merge run ``level`` into ``level + 1``."""
        run = self.run_at(level)
        if run is None:
            return
        entries, tombstones = list(run.entries()), run.tombstones()
        self.levels[level] = None
        self._merge_into(level + 1, entries, tombstones)
        self.device.delete(run.path)
        self.stats.compactions += 1

    def compact_all(self) -> None:
        """Flush, push every run into the deepest level and cascade if it overflows."""
        self.flush()
        deepest = self.deepest_level()
        for level in range(1, deepest):
            self.compact(level)
        if deepest:
            self._cascade(deepest)

    def _cascade(self, level: int) -> None:
        while True:
            run = self.run_at(level)
            if run is None or run.weight <= self.config.level_capacity(level):
                return
            self.compact(level)
            level += 1

    def _merge_into(self, target: int, upper: List[Entry], upper_tombstones: List[RangeTombstone]) -> None:
        self._ensure_level(target)
        lower = self.levels[target]
        bottommost = self.is_bottommost(target)

        lower_entries = list(lower.entries()) if lower is not None else []
        lower_tombstones = lower.tombstones() if lower is not None else []
        merged = merge_newest([upper, lower_entries])
        tombstones = coalesce_tombstones(upper_tombstones + lower_tombstones)

        if tombstones:
            merged = TombstoneSweep(tombstones).purge(merged)

        keyspan = _keyspan([upper, lower_entries], tombstones)

        if self.compaction_filter is not None and merged:
            merged = self.compaction_filter(merged, keyspan)

        if bottommost:
            merged = [e for e in merged if not e.is_tombstone]
            tombstones = []

        if lower is not None:
            self.device.delete(lower.path)
        if merged or tombstones:
            self.levels[target] = SortedRun.write(
                self.run_path(target), target, merged, tombstones, self.config, self.device
            )
        else:
            self.levels[target] = None

        logger.info(
            f"merge into level {target}: {len(merged)} entries, {len(tombstones)} range tombstones"
            f"{' (bottommost)' if bottommost else ''}"
        )
        if bottommost:
            self.stats.bottommost_compactions += 1
            if self.on_bottommost_compaction is not None:
                self.on_bottommost_compaction(keyspan)

    # Reads

    def get(self, key: int) -> LookupResult:
        """Search memtable, then levels top-down; first decisive outcome wins."""
        self._check_open()
        lrr = self.strategy == Strategy.LRR
        covering = self.memtable.covering_seq(key) if lrr else 0

        entry = self.memtable.get(key)
        if entry is not None:
            return resolve(entry, covering)
        if covering:
            return DELETED_BY_RANGE

        for run in self.runs():
            if lrr and run.tombstone_count:
                seq, examined = run.probe_tombstones(key)
                self.stats.range_tombstone_probes += 1
                self.stats.range_records_examined += examined
                covering = max(covering, seq)

            entry = self._probe_run(run, key)
            if entry is not None:
                return resolve(entry, covering)
            if covering:
                return DELETED_BY_RANGE
        return NOT_FOUND

    def _probe_run(self, run: SortedRun, key: int) -> Optional[Entry]:
        if not run.key_in_bounds(key):
            return None
        if not run.bloom_positive(key):
            self.stats.bloom_negatives += 1
            return None
        entry = run.get(key)
        if entry is None:
            self.stats.bloom_false_positives += 1
        return entry

    def scan_entries(self, lo: int, hi: int) -> List[Entry]:
        """Newest live entry per key in [lo, hi), after tombstone filtering."""
        newest: Dict[int, Entry] = {}
        tombstones: List[RangeTombstone] = []
        lrr = self.strategy == Strategy.LRR

        for entry in self.memtable.entries_in_range(lo, hi):
            newest[entry.key] = entry
        if lrr:
            tombstones.extend(self.memtable.tombstones_overlapping(lo, hi))

        for run in self.runs():
            for entry in run.entries_in_range(lo, hi):
                newest.setdefault(entry.key, entry)
            if lrr and run.tombstone_count:
                tombstones.extend(t for t in run.tombstones_before(hi) if t.end_key > lo)

        entries = [newest[key] for key in sorted(newest)]
        if tombstones:
            entries = TombstoneSweep(tombstones).purge(entries)
        return [e for e in entries if not e.is_tombstone]

    def scan(self, lo: int, hi: int) -> List[Tuple[int, bytes]]:
        """Live (key, value) pairs in [lo, hi), ascending."""
        self._check_open()
        self._check_range(lo, hi)
        return [(e.key, e.value) for e in self.scan_entries(lo, hi)]

    # Accounting

    def live_entry_count(self) -> int:
        return len(self.memtable) + sum(run.entry_count for run in self.runs())

    def memory_bytes(self) -> Dict[str, int]:
        return {
            "bloom_and_fences": sum(run.memory_bytes for run in self.runs()),
            "write_buffer": self.memtable.size_bytes,
        }

    def disk_bytes(self) -> int:
        return sum(run.size_bytes for run in self.runs())

    def stats_dict(self) -> Dict[str, object]:
        data = self.stats.to_dict()
        data["levels"] = self.level_count
        data["entries_per_level"] = {
            level: run.entry_count for level, run in enumerate(self.levels) if run is not None
        }
        return data

    def close(self, extra_manifest: Optional[Dict[str, str]] = None) -> None:
        if self.closed:
            return
        self.flush()
        self.write_manifest(extra_manifest)
        self.device.close_all()
        self.closed = True
