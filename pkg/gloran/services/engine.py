"""
GLORAN store: a leveling LSM-tree without local range tombstones, a global
index of range records, and an entry validity estimator in front of it.

Point lookups search the LSM-tree first; only a found entry that the
estimator cannot clear is checked against the index. Compactions drop
entries covered by the index, and bottommost compactions advance the GC
watermark.
"""

import logging
import os
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from gloran.models.config import Strategy, StoreConfig
from gloran.models.effective_area import RangeRecord
from gloran.models.entry import DELETED_BY_RANGE, Entry, LookupResult
from gloran.services.block_device import BlockDevice, IOCounters
from gloran.services.eve import EVE, Verdict, build_estimator
from gloran.services.lsm_drtree import KeySpan, LsmDRtreeIndex
from gloran.services.lsm_store import CONFIG_NAME, LsmStore
from gloran.utils.error_handling import ErrorContext

logger = logging.getLogger(__name__)


class GloranStore:
    """LSM-tree plus global range-record index plus estimator."""

    def __init__(self, root: Path, config: StoreConfig, device: Optional[BlockDevice] = None):
        self.root = Path(root)
        self.config = config
        self.device = device or BlockDevice(config.block_size)
        self.lsm = LsmStore(
            self.root,
            config,
            device=self.device,
            compaction_filter=self.purge_covered,
            on_bottommost_compaction=self.maybe_gc,
        )
        self.index = LsmDRtreeIndex(self.root, config, self.device)
        self.estimator: Optional[EVE] = self._new_estimator() if config.eve_enabled else None
        self.eve_false_positives = 0
        self.eve_maybe = 0
        self.eve_valid = 0

    def _new_estimator(self, seed_areas: Optional[list] = None) -> EVE:
        return build_estimator(
            self.config.eve_first_capacity,
            self.config.segment_width,
            self.config.eve_bits_per_record,
            seed_areas,
        )

    @property
    def strategy(self) -> Strategy:
        return Strategy.GLORAN

    @property
    def sequencer(self):
        return self.lsm.sequencer

    @property
    def stats(self):
        return self.lsm.stats

    # Persistence

    def restore(self, manifest: Dict[str, str]) -> None:
        self.lsm.restore(manifest)
        self.index.restore(manifest)
        if self.config.eve_enabled:
            self.estimator = self._new_estimator(
                [(a.key_lo, a.key_hi, a.seq_hi) for a in self.index.all_areas()]
            )

    def close(self) -> None:
        if self.lsm.closed:
            return
        self.lsm.flush()
        self.index.flush_buffer()
        self.lsm.close(self.index.manifest_entries())

    # Writes

    def put(self, key: int, value: bytes) -> int:
        return self.lsm.put(key, value)

    def delete(self, key: int) -> int:
        return self.lsm.delete(key)

    def range_delete(self, lo: int, hi: int) -> int:
        """
        Record [lo, hi) x [floor, seq) in the index and the estimator.

        The floor is the lower of the GC watermark and the oldest sequence
        number still present in the LSM-tree.
        """
        self.lsm._check_open()
        self.lsm._check_range(lo, hi)
        seq = self.sequencer.next_sequence()
        floor = min(self.index.watermark, self.lsm.oldest_sequence())
        record = RangeRecord.issue(lo, hi, floor, seq)
        self.index.insert_record(record)
        if self.estimator is not None:
            self.estimator.insert(lo, hi, seq)
        return 1

    def flush(self) -> None:
        self.lsm.flush()

    def compact_all(self) -> None:
        self.lsm.compact_all()

    # Reads

    def get(self, key: int) -> LookupResult:
        result = self.lsm.get(key)
        if not result.found:
            return result

        if self.estimator is not None:
            if self.estimator.query(key, result.seq) == Verdict.DEFINITELY_VALID:
                self.eve_valid += 1
                return result
            self.eve_maybe += 1

        covered, _ = self.index.check_deleted(key, result.seq)
        if covered:
            return DELETED_BY_RANGE
        if self.estimator is not None:
            self.eve_false_positives += 1
        return result

    def scan_entries(self, lo: int, hi: int) -> List[Entry]:
        entries = self.lsm.scan_entries(lo, hi)
        return self.index.filter_covered(entries, lo, hi)

    def scan(self, lo: int, hi: int) -> List[Tuple[int, bytes]]:
        self.lsm._check_open()
        self.lsm._check_range(lo, hi)
        return [(e.key, e.value) for e in self.scan_entries(lo, hi)]

    # Compaction hooks

    def purge_covered(self, entries: List[Entry], keyspan: KeySpan) -> List[Entry]:
        """Compaction filter: stream the index across the keyspan and drop covered values."""
        lo, hi = keyspan
        return self.index.filter_covered(entries, lo, hi)

    def watermark_candidate(self) -> int:
        """Sequence number below which all data has reached the bottommost level."""
        above_bottom = self.lsm.min_sequence_above_bottom()
        if above_bottom is None:
            return self.sequencer.current
        return above_bottom - 1

    def maybe_gc(self, keyspan: KeySpan) -> int:
        """Bottommost compaction listener: advance the watermark and collect garbage."""
        candidate = self.watermark_candidate()
        if candidate <= self.index.watermark:
            return 0
        self.index.advance_watermark(candidate)
        purged = self.index.gc(keyspan)
        if self.estimator is not None:
            self.estimator.drop_outdated(candidate)
        return purged

    # Accounting

    @property
    def eve_fpr(self) -> Optional[float]:
        """False MaybeDeleted verdicts over found entries that turned out valid."""
        valid = self.eve_valid + self.eve_false_positives
        return self.eve_false_positives / valid if valid else None

    def memory_bytes(self) -> Dict[str, int]:
        memory = self.lsm.memory_bytes()
        memory["index_buffer"] = self.index.buffer.size_bytes
        memory["eve"] = self.estimator.size_bytes if self.estimator is not None else 0
        return memory

    def disk_bytes(self) -> int:
        return self.lsm.disk_bytes() + self.index.disk_bytes()

    def stats_dict(self) -> Dict[str, object]:
        data = self.lsm.stats_dict()
        data["index"] = self.index.stats.to_dict()
        data["index"].update(self.index.node_counts())
        data["index"]["watermark"] = self.index.watermark
        data["eve"] = self.estimator.to_dict() if self.estimator is not None else None
        data["eve_fpr"] = self.eve_fpr
        return data


Store = Union[LsmStore, GloranStore]


def open_store(
    path: Union[str, Path],
    config: Optional[StoreConfig] = None,
    device: Optional[BlockDevice] = None,
) -> Store:
    """
    Open or create a store directory.

    An existing ``config.txt`` wins over ``config``; a new directory records
    the given (or default) configuration.
    """
    root = Path(path)
    with ErrorContext("open store", path=root):
        root.mkdir(parents=True, exist_ok=True)
    config_path = root / CONFIG_NAME
    if config_path.exists():
        config = StoreConfig.from_file(config_path)
    else:
        config = config or StoreConfig()
        with ErrorContext("write config", path=config_path):
            config.to_file(config_path)

    if config.strategy == Strategy.GLORAN:
        store: Store = GloranStore(root, config, device)
    else:
        store = LsmStore(root, config, device)

    manifest = LsmStore.read_manifest(root)
    if manifest is not None:
        store.restore(manifest)
        logger.info(f"reopened {config.strategy.value} store at {root}")
    else:
        logger.info(f"created {config.strategy.value} store at {root}")
    return store


def io_counters(store: Store) -> IOCounters:
    return store.device.counters


DEFAULT_DATA_DIR = "data"

_store: Optional[Store] = None


def get_store() -> Store:
    """
    Get the process-wide store served over HTTP.

    Lives in ``$GLORAN_DATA_DIR/kv``; a new store takes ``$GLORAN_CONFIG``
    when set.
    """
    global _store
    if _store is None:
        root = Path(os.getenv("GLORAN_DATA_DIR", DEFAULT_DATA_DIR)) / "kv"
        config_file = os.getenv("GLORAN_CONFIG")
        config = StoreConfig.from_file(config_file) if config_file else None
        _store = open_store(root, config)
    return _store


def reset_store() -> None:
    """Close the process-wide store, if open."""
    global _store
    if _store is not None:
        _store.close()
        _store = None
