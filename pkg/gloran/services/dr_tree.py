"""
Disjoint R-tree.

A bulk-packed hierarchy over key-sorted, key-disjoint effective areas. Each
node holds up to D slots ``{key_lo, key_hi, seq_lo, seq_hi, child}``; slots
of a leaf node are the areas themselves, slots of an internal node are the
bounding rectangles of its children. Sibling key ranges never overlap, so a
point query follows at most one slot per node and reads at most one node per
level.

Nodes are fixed-size records packed B // node_size to a block and never
straddle a block boundary, so reading a node costs one block and rewriting a
tree costs the blocks its bytes fill.

File layout:
    header block   magic, height, leaf_count, fanout, min_seq_hi, max_seq_hi,
                   then (node_count, byte_offset) per node level, root first
    node levels    root first, contiguous across levels:
                   slot count (2) | is_leaf (1) | pad (5) | D slots
"""

import bisect
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, List, Optional, Sequence

from gloran.models.config import DRTREE_NODE_HEADER, StoreConfig, drtree_slot_size
from gloran.models.effective_area import EffectiveArea
from gloran.services.block_device import BlockDevice, IOCategory
from gloran.services.disjointize import is_disjoint
from gloran.utils.error_handling import CorruptFileError, IndexBuildError

logger = logging.getLogger(__name__)

DRTREE_MAGIC = b"GLRNDRT1"
_HEADER = struct.Struct(">8sIQIQQ")
_LEVEL = struct.Struct(">QQ")
_NODE = struct.Struct(">HB5x")
_SEQS = struct.Struct(">QQQ")


@dataclass(frozen=True)
class Slot:
    key_lo: int
    key_hi: int
    seq_lo: int
    seq_hi: int
    child: int

    def area(self) -> EffectiveArea:
        return EffectiveArea(self.key_lo, self.key_hi, self.seq_lo, self.seq_hi)


@dataclass
class Node:
    is_leaf: bool
    slots: List[Slot]

    def bounds(self, index: int) -> Slot:
        """Bounding slot of this node as seen from its parent."""
        return Slot(
            self.slots[0].key_lo,
            self.slots[-1].key_hi,
            min(s.seq_lo for s in self.slots),
            max(s.seq_hi for s in self.slots),
            index,
        )


@dataclass(frozen=True)
class QueryResult:
    covered: bool
    node_accesses: int
    area: Optional[EffectiveArea] = None


def _pack_levels(areas: Sequence[EffectiveArea], fanout: int) -> List[List[Node]]:
    """Fixed-arity packing, bottom-up. Returns node levels root first."""
    slots = [Slot(a.key_lo, a.key_hi, a.seq_lo, a.seq_hi, i) for i, a in enumerate(areas)]
    level = [Node(True, slots[i:i + fanout]) for i in range(0, len(slots), fanout)]
    levels = [level]
    while len(level) > 1:
        parents = [node.bounds(i) for i, node in enumerate(level)]
        level = [Node(False, parents[i:i + fanout]) for i in range(0, len(parents), fanout)]
        levels.append(level)
    levels.reverse()
    return levels


def node_size(config: StoreConfig) -> int:
    return DRTREE_NODE_HEADER + config.drtree_fanout * drtree_slot_size(config.key_size)


def nodes_per_block(config: StoreConfig) -> int:
    return config.block_size // node_size(config)


class DRTree:
    """Immutable on-disk DR-tree. An empty tree has no file and answers NotCovered."""

    def __init__(
        self,
        path: Path,
        config: StoreConfig,
        device: BlockDevice,
        leaf_count: int,
        level_counts: List[int],
        level_offsets: List[int],
        min_seq_hi: int = 0,
        max_seq_hi: int = 0,
    ):
        self.path = path
        self.config = config
        self.device = device
        self.leaf_count = leaf_count
        self.level_counts = level_counts
        self.level_offsets = level_offsets
        self.min_seq_hi = min_seq_hi
        self.max_seq_hi = max_seq_hi
        self.node_size = node_size(config)
        self.nodes_per_block = nodes_per_block(config)
        # ordinal of each level's first node in the packed node array
        self.level_starts = [sum(level_counts[:i]) for i in range(len(level_counts))]

    @property
    def height(self) -> int:
        """Number of node levels; one node read per level at most."""
        return len(self.level_counts)

    @property
    def node_count(self) -> int:
        return sum(self.level_counts)

    @property
    def logical_node_count(self) -> int:
        """Nodes counting every leaf area as a node of its own, as the space bound does."""
        return self.node_count + self.leaf_count

    @property
    def block_count(self) -> int:
        """Blocks holding nodes, header excluded."""
        return -(-self.node_count // self.nodes_per_block) if self.node_count else 0

    def __len__(self) -> int:
        return self.leaf_count

    @property
    def is_empty(self) -> bool:
        return self.leaf_count == 0

    # Building

    @classmethod
    def build(
        cls,
        areas: Sequence[EffectiveArea],
        path: Path,
        config: StoreConfig,
        device: BlockDevice,
    ) -> "DRTree":
        """
        Bulk-load sorted, key-disjoint areas and serialize root first.

        Raises:
            IndexBuildError: If the input is unsorted or overlapping
        """
        areas = list(areas)
        if not is_disjoint(areas):
            raise IndexBuildError(
                "DR-tree input must be sorted by key and key-disjoint",
                details={"path": str(path), "areas": len(areas)}
            )
        if not areas:
            device.delete(path)
            return cls(path, config, device, 0, [], [])

        block_size = config.block_size
        key_size = config.key_size
        size = node_size(config)
        per_block = nodes_per_block(config)
        levels = _pack_levels(areas, config.drtree_fanout)
        level_counts = [len(level) for level in levels]

        header_size = _HEADER.size + _LEVEL.size * len(levels)
        header_bytes = -(-header_size // block_size) * block_size

        def offset_of(ordinal: int) -> int:
            return header_bytes + (ordinal // per_block) * block_size + (ordinal % per_block) * size

        level_offsets = []
        ordinal = 0
        for count in level_counts:
            level_offsets.append(offset_of(ordinal))
            ordinal += count

        seq_his = [a.seq_hi for a in areas]
        header = _HEADER.pack(
            DRTREE_MAGIC, len(levels), len(areas), config.drtree_fanout,
            min(seq_his), max(seq_his),
        ) + b"".join(_LEVEL.pack(c, o) for c, o in zip(level_counts, level_offsets))

        body = bytearray(header.ljust(header_bytes, b"\0"))
        block = bytearray()
        for level in levels:
            for node in level:
                record = bytearray(_NODE.pack(len(node.slots), int(node.is_leaf)))
                for slot in node.slots:
                    record += slot.key_lo.to_bytes(key_size, "big")
                    record += slot.key_hi.to_bytes(key_size, "big")
                    record += _SEQS.pack(slot.seq_lo, slot.seq_hi, slot.child)
                block += record.ljust(size, b"\0")
                if len(block) + size > block_size:
                    body += block.ljust(block_size, b"\0")
                    block = bytearray()
        if block:
            body += block.ljust(block_size, b"\0")

        device.write_file(path, bytes(body), IOCategory.INDEX_WRITE)
        logger.debug(f"DR-tree {path.name}: {len(areas)} leaves, height {len(levels)}")
        return cls(path, config, device, len(areas), level_counts, level_offsets,
                   min(seq_his), max(seq_his))

    @classmethod
    def open(cls, path: Path, config: StoreConfig, device: BlockDevice) -> "DRTree":
        if not path.exists():
            return cls(path, config, device, 0, [], [])
        block = device.read_blocks(path, 0, 1, IOCategory.INDEX_READ)
        magic, node_levels, leaf_count, _, min_seq_hi, max_seq_hi = _HEADER.unpack_from(block)
        if magic != DRTREE_MAGIC:
            raise CorruptFileError(f"{path.name} is not a DR-tree file", details={"path": str(path)})
        extra = _HEADER.size + _LEVEL.size * node_levels
        if extra > len(block):
            block = device.read(path, 0, extra, IOCategory.INDEX_READ)
        counts, offsets = [], []
        for i in range(node_levels):
            count, offset = _LEVEL.unpack_from(block, _HEADER.size + i * _LEVEL.size)
            counts.append(count)
            offsets.append(offset)
        return cls(path, config, device, leaf_count, counts, offsets, min_seq_hi, max_seq_hi)

    # Node access

    def _decode_node(self, data: bytes, offset: int = 0) -> Node:
        key_size = self.config.key_size
        count, is_leaf = _NODE.unpack_from(data, offset)
        slots = []
        position = offset + DRTREE_NODE_HEADER
        for _ in range(count):
            key_lo = int.from_bytes(data[position:position + key_size], "big")
            key_hi = int.from_bytes(data[position + key_size:position + 2 * key_size], "big")
            seq_lo, seq_hi, child = _SEQS.unpack_from(data, position + 2 * key_size)
            slots.append(Slot(key_lo, key_hi, seq_lo, seq_hi, child))
            position += 2 * key_size + _SEQS.size
        return Node(bool(is_leaf), slots)

    def _block_of(self, ordinal: int) -> int:
        return self.level_offsets[0] // self.config.block_size + ordinal // self.nodes_per_block

    def read_node(self, level: int, index: int) -> Node:
        ordinal = self.level_starts[level] + index
        offset = self._block_of(ordinal) * self.config.block_size
        offset += (ordinal % self.nodes_per_block) * self.node_size
        data = self.device.read(self.path, offset, self.node_size, IOCategory.INDEX_READ)
        return self._decode_node(data)

    def _read_nodes(self, level: int, first: int, count: int) -> Iterator[Node]:
        """Nodes first..first+count-1 of a level, reading each block they span once."""
        if count <= 0:
            return
        start = self.level_starts[level] + first
        first_block = self._block_of(start)
        blocks = self._block_of(start + count - 1) - first_block + 1
        data = self.device.read_blocks(self.path, first_block, blocks, IOCategory.INDEX_READ)
        for ordinal in range(start, start + count):
            position = (self._block_of(ordinal) - first_block) * self.config.block_size
            position += (ordinal % self.nodes_per_block) * self.node_size
            yield self._decode_node(data, position)

    # Queries

    def query_point(self, key: int, seq: int) -> QueryResult:
        """Descend from the root following the single slot containing key."""
        if self.is_empty:
            return QueryResult(False, 0)
        index = 0
        accesses = 0
        for level in range(self.height):
            node = self.read_node(level, index)
            accesses += 1
            j = bisect.bisect_right([s.key_lo for s in node.slots], key) - 1
            if j < 0:
                return QueryResult(False, accesses)
            slot = node.slots[j]
            if key >= slot.key_hi or not slot.seq_lo <= seq < slot.seq_hi:
                return QueryResult(False, accesses)
            if node.is_leaf:
                return QueryResult(True, accesses, slot.area())
            index = slot.child
        return QueryResult(False, accesses)

    def iterate(self, key_lo: Optional[int] = None, key_hi: Optional[int] = None) -> Iterator[EffectiveArea]:
        """
        Leaf areas intersecting [key_lo, key_hi) in key order.

        Descends to the first qualifying leaf node, then reads leaf nodes
        sequentially. With no bounds the whole leaf level is read in one pass.
        """
        if self.is_empty:
            return
        if key_lo is not None and key_hi is not None and key_lo >= key_hi:
            return
        leaf_level = self.height - 1

        if key_lo is None:
            first = 0
        else:
            index = 0
            for level in range(leaf_level):
                node = self.read_node(level, index)
                j = bisect.bisect_right([s.key_hi for s in node.slots], key_lo)
                if j == len(node.slots):
                    return
                index = node.slots[j].child
            first = index

        if key_hi is None:
            nodes = self._read_nodes(leaf_level, first, self.level_counts[leaf_level] - first)
            for node in nodes:
                for slot in node.slots:
                    if key_lo is None or slot.key_hi > key_lo:
                        yield slot.area()
            return

        for index in range(first, self.level_counts[leaf_level]):
            node = self.read_node(leaf_level, index)
            for slot in node.slots:
                if slot.key_lo >= key_hi:
                    return
                if key_lo is None or slot.key_hi > key_lo:
                    yield slot.area()

    def leaves(self) -> List[EffectiveArea]:
        return list(self.iterate())

    @property
    def size_bytes(self) -> int:
        return self.device.file_size(self.path)


def space_bound(leaf_count: int, fanout: int, partial_levels: int = 0) -> float:
    """
    Upper bound on logical nodes (areas plus internal nodes) of a packed tree.

    D/(D-1) * n holds exactly when n is a power of D. Otherwise each node
    level may end in one partly filled node; pass the number of node levels
    as ``partial_levels`` to allow for them.
    """
    return fanout / (fanout - 1) * leaf_count + partial_levels


def access_bound(leaf_count: int, fanout: int) -> int:
    """Levels of a packed tree over leaf_count areas: max(1, ceil(log_D n))."""
    height = 1
    capacity = fanout
    while capacity < leaf_count:
        capacity *= fanout
        height += 1
    return height
