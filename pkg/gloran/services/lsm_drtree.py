"""
Global range-record index.

An in-memory R-tree buffer of F' areas sits above levels of immutable
DR-trees, level i holding about F' * T'^i disjoint areas. A full buffer is
disjointized and merged into level 1; overflowing levels are merged downward
with a streaming two-way merge. Validity checks search newest to oldest and
stop at the first covering area.
"""

import logging
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Optional, Tuple

from gloran.models.config import StoreConfig
from gloran.models.effective_area import EffectiveArea, RangeRecord
from gloran.models.entry import Entry
from gloran.services.block_device import BlockDevice
from gloran.services.disjointize import merge_disjoint, sweep_disjointize
from gloran.services.dr_tree import DRTree, space_bound
from gloran.services.dr_tree import access_bound as tree_height_bound
from gloran.services.rtree_buffer import RTreeBuffer

logger = logging.getLogger(__name__)

KeySpan = Tuple[int, int]


@dataclass
class IndexStats:
    """Counters and audit results of the global index."""
    records: int = 0
    flushes: int = 0
    compactions: int = 0
    checks: int = 0
    node_accesses: int = 0
    max_node_accesses: int = 0
    access_bound_violations: int = 0
    height_violations: int = 0
    space_bound_violations: int = 0
    trees_built: int = 0
    gc_runs: int = 0
    gc_purged_leaves: int = 0

    def to_dict(self) -> Dict[str, int]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


class CoverageCursor:
    """
    Walks several key-sorted, key-disjoint area streams alongside ascending
    keys and reports whether any current area covers (key, seq).
    """

    def __init__(self, streams: Iterable[Iterable[EffectiveArea]]):
        self._streams = [iter(s) for s in streams]
        self._heads: List[Optional[EffectiveArea]] = [next(s, None) for s in self._streams]

    def covered(self, key: int, seq: int) -> bool:
        hit = False
        for i, stream in enumerate(self._streams):
            head = self._heads[i]
            while head is not None and head.key_hi <= key:
                head = next(stream, None)
            self._heads[i] = head
            if head is not None and head.covers(key, seq):
                hit = True
        return hit


class LsmDRtreeIndex:
    """Leveled DR-trees with an R-tree write buffer."""

    def __init__(self, root: Path, config: StoreConfig, device: BlockDevice):
        self.root = Path(root)
        self.config = config
        self.device = device
        self.buffer = RTreeBuffer(config.index_buffer_capacity, config.rtree_node_capacity)
        self.levels: List[Optional[DRTree]] = [None]
        self.watermark = 0
        self.stats = IndexStats()

    # Persistence

    def tree_path(self, level: int) -> Path:
        return self.root / f"idx_{level}.drt"

    def manifest_entries(self) -> Dict[str, str]:
        entries = {"index.watermark": str(self.watermark)}
        for level, tree in enumerate(self.levels):
            if tree is not None:
                entries[f"index.level.{level}"] = f"{tree.path.name} {tree.leaf_count}"
        return entries

    def restore(self, manifest: Dict[str, str]) -> None:
        self.watermark = int(manifest.get("index.watermark", "0"))
        for key, value in manifest.items():
            if not key.startswith("index.level."):
                continue
            level = int(key.rsplit(".", 1)[1])
            name = value.split()[0]
            self._ensure_level(level)
            self.levels[level] = DRTree.open(self.root / name, self.config, self.device)

    # Levels

    def _ensure_level(self, level: int) -> None:
        while len(self.levels) <= level:
            self.levels.append(None)

    def tree_at(self, level: int) -> Optional[DRTree]:
        return self.levels[level] if level < len(self.levels) else None

    def trees(self) -> List[DRTree]:
        """On-disk trees, newest level first."""
        return [tree for tree in self.levels if tree is not None]

    def deepest_level(self) -> int:
        for level in range(len(self.levels) - 1, 0, -1):
            if self.levels[level] is not None:
                return level
        return 0

    @property
    def record_count(self) -> int:
        """Areas currently held: buffer plus every level's leaves."""
        return len(self.buffer) + sum(tree.leaf_count for tree in self.trees())

    def _build(self, level: int, areas: Iterable[EffectiveArea]) -> Optional[DRTree]:
        self._ensure_level(level)
        tree = DRTree.build(list(areas), self.tree_path(level), self.config, self.device)
        if tree.is_empty:
            self.levels[level] = None
            return None
        self.levels[level] = tree
        self.stats.trees_built += 1
        bound = space_bound(tree.leaf_count, self.config.drtree_fanout, tree.height)
        if tree.logical_node_count > bound:
            self.stats.space_bound_violations += 1
            logger.warning(
                f"{tree.path.name}: {tree.logical_node_count} nodes exceed the space bound for "
                f"{tree.leaf_count} leaves"
            )
        return tree

    # Writes

    def insert_record(self, record: RangeRecord) -> None:
        self.buffer.insert(record.area)
        self.stats.records += 1
        if self.buffer.is_full():
            self.flush_buffer()

    def flush_buffer(self) -> None:
        """Disjointize the buffer, merge it into level 1 and cascade."""
        if len(self.buffer) == 0:
            return
        areas = sweep_disjointize(self.buffer.areas())
        existing = self.tree_at(1)
        if existing is not None:
            areas = list(merge_disjoint(areas, existing.iterate()))
        self._build(1, areas)
        self.buffer.clear()
        self.stats.flushes += 1
        logger.info(f"index flush: level 1 now holds {len(areas)} areas")
        self._cascade(1)

    def _cascade(self, level: int) -> None:
        while True:
            tree = self.tree_at(level)
            if tree is None or tree.leaf_count <= self.config.index_level_capacity(level):
                return
            self.compact_index(level)
            level += 1

    def compact_index(self, level: int) -> None:
        """Merge level ``level`` into ``level + 1`` with a streaming two-way merge."""
        upper = self.tree_at(level)
        if upper is None:
            return
        lower = self.tree_at(level + 1)
        merged = merge_disjoint(upper.iterate(), lower.iterate() if lower is not None else iter(()))
        tree = self._build(level + 1, merged)
        self.device.delete(upper.path)
        self.levels[level] = None
        self.stats.compactions += 1
        logger.info(
            f"index compaction {level} -> {level + 1}: "
            f"{tree.leaf_count if tree is not None else 0} areas"
        )

    # Reads

    def access_bound(self) -> int:
        """Summed per-level height bound over the levels present."""
        fanout = self.config.drtree_fanout
        return sum(
            tree_height_bound(2 * self.config.index_level_capacity(level), fanout)
            for level, tree in enumerate(self.levels) if tree is not None
        )

    def check_deleted(self, key: int, seq: int) -> Tuple[bool, int]:
        """
        Whether any area covers (key, seq), and the DR-tree nodes read.

        The buffer is searched first at no I/O cost, then levels top-down.
        """
        self.stats.checks += 1
        if self.buffer.search(key, seq) is not None:
            return True, 0

        accesses = 0
        covered = False
        for tree in self.trees():
            result = tree.query_point(key, seq)
            accesses += result.node_accesses
            if result.node_accesses > tree.height:
                self.stats.height_violations += 1
            if result.covered:
                covered = True
                break

        self.stats.node_accesses += accesses
        self.stats.max_node_accesses = max(self.stats.max_node_accesses, accesses)
        if accesses > self.access_bound():
            self.stats.access_bound_violations += 1
            logger.warning(f"check_deleted({key}, {seq}) read {accesses} nodes, bound {self.access_bound()}")
        return covered, accesses

    def sources(self, lo: Optional[int] = None, hi: Optional[int] = None) -> List[Iterator[EffectiveArea]]:
        """Disjoint, key-sorted area streams: buffer first, then each level."""
        buffered = sweep_disjointize(
            a for a in self.buffer.areas()
            if (lo is None or a.key_hi > lo) and (hi is None or a.key_lo < hi)
        )
        streams: List[Iterator[EffectiveArea]] = [iter(buffered)]
        for tree in self.trees():
            streams.append(tree.iterate(lo, hi))
        return streams

    def filter_covered(self, entries: List[Entry], lo: int, hi: int) -> List[Entry]:
        """Drop VALUE entries covered by any area; entries must be key-sorted."""
        if not entries or self.record_count == 0:
            return entries
        cursor = CoverageCursor(self.sources(lo, hi))
        return [e for e in entries if e.is_tombstone or not cursor.covered(e.key, e.seq)]

    def all_areas(self) -> List[EffectiveArea]:
        areas = list(self.buffer.areas())
        for tree in self.trees():
            areas.extend(tree.iterate())
        return areas

    # Garbage collection

    def advance_watermark(self, watermark: int) -> None:
        if watermark < self.watermark:
            raise ValueError(f"watermark cannot move back from {self.watermark} to {watermark}")
        self.watermark = watermark

    def gc(self, keyspan: KeySpan) -> int:
        """
        Drop bottommost-level areas with seq_hi <= watermark lying inside keyspan.

        Areas straddling the keyspan are kept. Returns the number purged.
        """
        level = self.deepest_level()
        if level == 0 or self.watermark == 0:
            return 0
        lo, hi = keyspan
        tree = self.levels[level]
        leaves = list(tree.iterate())
        survivors = [
            a for a in leaves
            if not (a.seq_hi <= self.watermark and lo <= a.key_lo and a.key_hi <= hi)
        ]
        purged = len(leaves) - len(survivors)
        self.stats.gc_runs += 1
        if purged:
            self._build(level, survivors)
            self.stats.gc_purged_leaves += purged
            logger.info(f"index gc at level {level}: purged {purged} areas, watermark {self.watermark}")
        return purged

    # Accounting

    def node_counts(self) -> Dict[str, int]:
        return {
            "nodes": sum(tree.node_count for tree in self.trees()),
            "leaves": sum(tree.leaf_count for tree in self.trees()),
            "buffered": len(self.buffer),
        }

    def disk_bytes(self) -> int:
        return sum(tree.size_bytes for tree in self.trees())

