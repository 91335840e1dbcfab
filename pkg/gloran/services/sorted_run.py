"""
On-disk sorted run.

File layout, every region starting on a block boundary:

    header block   magic, level, entry_count, min_key, max_key, fence_count,
                   bloom_bits, bloom_bytes, bloom_hashes, tombstone_record_count,
                   min_seq, max_seq
    metadata       fence array (first key of each data block, k bytes each)
                   followed by the packed Bloom bits
    data blocks    floor(B / e) entries per block, e bytes each:
                   key (k, big-endian) | seq (8) | kind (1) | length (2) | value | zero padding
    tombstones     range tombstone records (start k | end k | seq 8) sorted by start,
                   packed back to back

Fences and the Bloom filter stay in memory once the run is written or opened.
"""

import bisect
import logging
import struct
from pathlib import Path
from typing import Iterator, List, Optional, Sequence, Tuple

from gloran.models.config import StoreConfig
from gloran.models.entry import Entry, EntryKind, RangeTombstone
from gloran.services.block_device import BlockDevice, IOCategory, blocks_for
from gloran.services.bloom import BloomFilter
from gloran.utils.error_handling import CorruptFileError, ValueTooLargeError

logger = logging.getLogger(__name__)

RUN_MAGIC = b"GLRNRUN1"
_HEADER = struct.Struct(">8sIQQQQQQIQQQ")
_ENTRY_TAIL = struct.Struct(">QBH")
_SEQ = struct.Struct(">Q")


def encode_key(key: int, key_size: int) -> bytes:
    return key.to_bytes(key_size, "big")


def encode_entry(entry: Entry, config: StoreConfig) -> bytes:
    if len(entry.value) > config.value_size:
        raise ValueTooLargeError(
            f"value of {len(entry.value)} bytes exceeds slot of {config.value_size}",
            details={"key": entry.key, "limit": config.value_size}
        )
    body = (
        encode_key(entry.key, config.key_size)
        + _ENTRY_TAIL.pack(entry.seq, int(entry.kind), len(entry.value))
        + entry.value
    )
    return body.ljust(config.entry_size, b"\0")


def decode_entry(data: bytes, offset: int, key_size: int) -> Entry:
    key = int.from_bytes(data[offset:offset + key_size], "big")
    seq, kind, length = _ENTRY_TAIL.unpack_from(data, offset + key_size)
    start = offset + key_size + _ENTRY_TAIL.size
    return Entry(key, seq, EntryKind(kind), bytes(data[start:start + length]))


def encode_tombstone(tombstone: RangeTombstone, key_size: int) -> bytes:
    return (
        encode_key(tombstone.start_key, key_size)
        + encode_key(tombstone.end_key, key_size)
        + _SEQ.pack(tombstone.seq)
    )


def decode_tombstone(data: bytes, offset: int, key_size: int) -> RangeTombstone:
    start = int.from_bytes(data[offset:offset + key_size], "big")
    end = int.from_bytes(data[offset + key_size:offset + 2 * key_size], "big")
    (seq,) = _SEQ.unpack_from(data, offset + 2 * key_size)
    return RangeTombstone(start, end, seq)


def _pad(payload: bytes, block_size: int) -> bytes:
    return payload.ljust(blocks_for(len(payload), block_size) * block_size, b"\0")


class SortedRun:
    """One immutable run of a level, with fence pointers and a Bloom filter."""

    def __init__(
        self,
        path: Path,
        config: StoreConfig,
        device: BlockDevice,
        level: int,
        entry_count: int,
        min_key: int,
        max_key: int,
        min_seq: int,
        max_seq: int,
        fences: List[int],
        bloom: BloomFilter,
        tombstone_count: int,
    ):
        self.path = path
        self.config = config
        self.device = device
        self.level = level
        self.entry_count = entry_count
        self.min_key = min_key
        self.max_key = max_key
        self.min_seq = min_seq
        self.max_seq = max_seq
        self.fences = fences
        self.bloom = bloom
        self.tombstone_count = tombstone_count

        block_size = config.block_size
        meta_bytes = len(fences) * config.key_size + bloom.size_bytes
        self.data_first_block = 1 + blocks_for(meta_bytes, block_size)
        self.data_blocks = blocks_for(entry_count, config.entries_per_block)
        self.tombstone_first_block = self.data_first_block + self.data_blocks
        self.tombstone_blocks = blocks_for(tombstone_count * config.range_tombstone_size, block_size)

    @property
    def weight(self) -> int:
        """Entries plus range-tombstone bytes in entry units; what level capacity counts."""
        return self.entry_count + blocks_for(self.tombstone_count * self.config.range_tombstone_size,
                                             self.config.entry_size)

    # Building

    @classmethod
    def write(
        cls,
        path: Path,
        level: int,
        entries: Sequence[Entry],
        tombstones: Sequence[RangeTombstone],
        config: StoreConfig,
        device: BlockDevice,
    ) -> "SortedRun":
        """Serialize sorted entries and tombstones; charged as data block writes."""
        block_size = config.block_size
        per_block = config.entries_per_block

        fences = [entries[i].key for i in range(0, len(entries), per_block)]
        bloom = BloomFilter.for_items(len(entries), config.bloom_bits_per_entry)
        bloom.add_many(entry.key for entry in entries)

        seqs = [entry.seq for entry in entries] + [t.seq for t in tombstones]
        min_key = entries[0].key if entries else 0
        max_key = entries[-1].key if entries else 0

        header = _HEADER.pack(
            RUN_MAGIC, level, len(entries), min_key, max_key, len(fences),
            bloom.num_bits, bloom.size_bytes, bloom.num_hashes, len(tombstones),
            min(seqs, default=0), max(seqs, default=0),
        )
        meta = b"".join(encode_key(key, config.key_size) for key in fences) + bloom.to_bytes()

        data = bytearray()
        for start in range(0, len(entries), per_block):
            block = b"".join(encode_entry(e, config) for e in entries[start:start + per_block])
            data += block.ljust(block_size, b"\0")

        tail = b"".join(encode_tombstone(t, config.key_size) for t in tombstones)
        payload = _pad(header, block_size) + _pad(meta, block_size) + bytes(data) + _pad(tail, block_size)
        device.write_file(path, payload, IOCategory.DATA_WRITE)

        logger.debug(
            f"run {path.name}: level {level}, {len(entries)} entries, {len(tombstones)} range tombstones"
        )
        return cls(
            path, config, device, level, len(entries), min_key, max_key,
            min(seqs, default=0), max(seqs, default=0), fences, bloom, len(tombstones),
        )

    @classmethod
    def open(cls, path: Path, config: StoreConfig, device: BlockDevice) -> "SortedRun":
        """Load header, fences and Bloom bits of an existing run file."""
        block = device.read_blocks(path, 0, 1, IOCategory.DATA_READ)
        (magic, level, entry_count, min_key, max_key, fence_count, bloom_bits, bloom_bytes,
         bloom_hashes, tombstone_count, min_seq, max_seq) = _HEADER.unpack_from(block)
        if magic != RUN_MAGIC:
            raise CorruptFileError(f"{path.name} is not a run file", details={"path": str(path)})

        fence_bytes = fence_count * config.key_size
        meta = device.read(path, config.block_size, fence_bytes + bloom_bytes, IOCategory.DATA_READ)
        fences = [
            int.from_bytes(meta[i:i + config.key_size], "big")
            for i in range(0, fence_bytes, config.key_size)
        ]
        bloom = BloomFilter.from_bytes(meta[fence_bytes:], bloom_bits, bloom_hashes)
        return cls(
            path, config, device, level, entry_count, min_key, max_key,
            min_seq, max_seq, fences, bloom, tombstone_count,
        )

    # Point access

    def key_in_bounds(self, key: int) -> bool:
        return self.entry_count > 0 and self.min_key <= key <= self.max_key

    def bloom_positive(self, key: int) -> bool:
        return key in self.bloom

    def _entries_in_block(self, block: int) -> int:
        per_block = self.config.entries_per_block
        return min(per_block, self.entry_count - block * per_block)

    def _decode_block(self, data: bytes, block: int) -> List[Entry]:
        entry_size = self.config.entry_size
        return [
            decode_entry(data, i * entry_size, self.config.key_size)
            for i in range(self._entries_in_block(block))
        ]

    def get(self, key: int) -> Optional[Entry]:
        """Read the single candidate block chosen by the fences."""
        if not self.key_in_bounds(key):
            return None
        block = bisect.bisect_right(self.fences, key) - 1
        if block < 0:
            return None
        data = self.device.read_blocks(self.path, self.data_first_block + block, 1, IOCategory.DATA_READ)
        entries = self._decode_block(data, block)
        index = bisect.bisect_left([e.key for e in entries], key)
        if index < len(entries) and entries[index].key == key:
            return entries[index]
        return None

    # Sequential access

    def _read_data_blocks(self, first: int, last: int) -> Iterator[Entry]:
        if last < first:
            return
        data = self.device.read_blocks(
            self.path, self.data_first_block + first, last - first + 1, IOCategory.DATA_READ
        )
        block_size = self.config.block_size
        for block in range(first, last + 1):
            offset = (block - first) * block_size
            yield from self._decode_block(data[offset:offset + block_size], block)

    def entries(self) -> Iterator[Entry]:
        """All entries in key order."""
        return self._read_data_blocks(0, self.data_blocks - 1)

    def entries_in_range(self, lo: int, hi: int) -> Iterator[Entry]:
        """Entries with lo <= key < hi, reading only the overlapping blocks."""
        if self.entry_count == 0 or hi <= self.min_key or lo > self.max_key:
            return iter(())
        first = max(0, bisect.bisect_right(self.fences, lo) - 1)
        last = bisect.bisect_left(self.fences, hi) - 1
        return (e for e in self._read_data_blocks(first, last) if lo <= e.key < hi)

    # Range tombstones

    def tombstones_before(self, stop_key: Optional[int] = None) -> Iterator[RangeTombstone]:
        """
        Records with start_key < stop_key (all records when stop_key is None).

        Reads the first tombstone block and then further blocks sequentially
        while records keep qualifying.
        """
        if self.tombstone_count == 0:
            return
        key_size = self.config.key_size
        record = self.config.range_tombstone_size
        buffer = bytearray()
        consumed = 0
        for block in range(self.tombstone_blocks):
            buffer += self.device.read_blocks(
                self.path, self.tombstone_first_block + block, 1, IOCategory.TOMBSTONE_READ
            )
            while consumed < self.tombstone_count and (consumed + 1) * record <= len(buffer):
                tombstone = decode_tombstone(buffer, consumed * record, key_size)
                if stop_key is not None and tombstone.start_key >= stop_key:
                    return
                consumed += 1
                yield tombstone
            if consumed == self.tombstone_count:
                return

    def tombstones(self) -> List[RangeTombstone]:
        return list(self.tombstones_before(None))

    def probe_tombstones(self, key: int) -> Tuple[int, int]:
        """
        Largest seq of a record covering key, and the number of records examined.

        Every record whose start key is below key is examined.
        """
        best = 0
        examined = 0
        for tombstone in self.tombstones_before(key + 1):
            if tombstone.start_key < key:
                examined += 1
            if key < tombstone.end_key and tombstone.seq > best:
                best = tombstone.seq
        return best, examined

    # Accounting

    @property
    def memory_bytes(self) -> int:
        """Fences plus Bloom bits held in memory."""
        return len(self.fences) * self.config.key_size + self.bloom.size_bytes

    @property
    def size_bytes(self) -> int:
        return self.device.file_size(self.path)

    def __len__(self) -> int:
        return self.entry_count
