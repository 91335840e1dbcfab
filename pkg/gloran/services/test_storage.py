"""
Tests for the storage primitives: block device accounting, Bloom filter,
memtable and on-disk sorted runs.
"""

import pytest

from gloran.models.entry import Entry, RangeTombstone
from gloran.services.block_device import BlockDevice, IOCategory, IOCounters, blocks_for
from gloran.services.bloom import BloomFilter
from gloran.services.memtable import Memtable
from gloran.services.sequence import SequenceCounter
from gloran.services.sorted_run import SortedRun, decode_entry, encode_entry
from gloran.utils.error_handling import CorruptFileError, StorageError, ValueTooLargeError


# Block device

def test_blocks_for_rounds_up():
    assert blocks_for(0, 256) == 0
    assert blocks_for(1, 256) == 1
    assert blocks_for(256, 256) == 1
    assert blocks_for(257, 256) == 2


def test_device_charges_whole_blocks(tmp_path):
    """Every transfer is charged as ceil(bytes / B) blocks to its category."""
    device = BlockDevice(256)
    path = tmp_path / "f.bin"
    assert device.write_file(path, b"x" * 600, IOCategory.DATA_WRITE) == 3
    assert device.counters.data_block_writes == 3

    device.read(path, 0, 10, IOCategory.TOMBSTONE_READ)
    device.read_blocks(path, 1, 1, IOCategory.DATA_READ)
    assert device.counters.tombstone_block_reads == 1
    assert device.counters.data_block_reads == 1
    assert device.counters.total == 5
    assert device.file_size(path) == 600

    print("✓ Block device accounting works correctly")


def test_device_short_read_is_corruption(tmp_path):
    """Reading past the end of a file raises CorruptFileError and charges nothing."""
    device = BlockDevice(256)
    path = tmp_path / "f.bin"
    device.write_file(path, b"x" * 100, IOCategory.INDEX_WRITE)
    with pytest.raises(CorruptFileError):
        device.read_blocks(path, 0, 1, IOCategory.INDEX_READ)
    assert device.counters.index_node_reads == 0


def test_device_missing_file_is_storage_error(tmp_path):
    device = BlockDevice(256)
    with pytest.raises(StorageError):
        device.read(tmp_path / "missing.bin", 0, 8, IOCategory.DATA_READ)


def test_device_delete_and_rewrite(tmp_path):
    """Deleting closes the cached handle; a rewritten file is read fresh."""
    device = BlockDevice(256)
    path = tmp_path / "f.bin"
    device.write_file(path, b"a" * 256, IOCategory.DATA_WRITE)
    assert device.read(path, 0, 1, IOCategory.DATA_READ) == b"a"
    device.write_file(path, b"b" * 256, IOCategory.DATA_WRITE)
    assert device.read(path, 0, 1, IOCategory.DATA_READ) == b"b"
    device.delete(path)
    assert not path.exists()
    device.delete(path)
    device.close_all()


def test_counter_snapshots():
    """Snapshots are independent copies; subtraction gives per-operation deltas."""
    counters = IOCounters()
    counters.charge(IOCategory.INDEX_READ, 2)
    before = counters.snapshot()
    counters.charge(IOCategory.INDEX_READ, 3)
    counters.charge(IOCategory.DATA_WRITE, 1)
    delta = counters - before
    assert delta.index_node_reads == 3
    assert delta.data_block_writes == 1
    assert before.index_node_reads == 2
    assert set(delta.to_dict()) == {c.value for c in IOCategory}


def test_sequence_counter():
    """Sequence numbers start after 0 and strictly increase."""
    sequencer = SequenceCounter()
    assert sequencer.current == 0
    assert [sequencer.next_sequence() for _ in range(3)] == [1, 2, 3]
    assert SequenceCounter(41).next_sequence() == 42
    with pytest.raises(ValueError):
        SequenceCounter(-1)


# Bloom filter

def test_bloom_has_no_false_negatives():
    bloom = BloomFilter.for_items(2000, 10)
    bloom.add_many(range(0, 4000, 2))
    assert all(key in bloom for key in range(0, 4000, 2))


def test_bloom_false_positive_rate():
    """At 10 bits per key the measured rate stays near the expected 0.8%."""
    bloom = BloomFilter.for_items(5000, 10)
    bloom.add_many(range(5000))
    false_positives = sum(1 for key in range(5000, 25000) if key in bloom)
    assert false_positives / 20000 < 0.03
    assert 0 < bloom.fill_ratio < 1


def test_bloom_serialization_preserves_membership():
    bloom = BloomFilter.for_items(100, 8, seed=3)
    bloom.add_many(range(100))
    restored = BloomFilter.from_bytes(bloom.to_bytes(), bloom.num_bits, bloom.num_hashes, seed=3)
    assert (restored.bits == bloom.bits).all()
    assert restored.size_bytes == bloom.size_bytes


def test_bloom_rejects_bad_sizes():
    with pytest.raises(ValueError):
        BloomFilter(0, 1)
    with pytest.raises(ValueError):
        BloomFilter(8, 0)


# Memtable

def test_memtable_keeps_newest_entry():
    memtable = Memtable(4)
    memtable.put(Entry.put(5, 1, b"old"))
    memtable.put(Entry.put(5, 2, b"new"))
    memtable.put(Entry.tombstone(3, 3))
    assert memtable.get(5).value == b"new"
    assert [e.key for e in memtable.entries()] == [3, 5]
    assert len(memtable) == 2
    assert memtable.min_seq() == 1


def test_memtable_range_tombstones_count_toward_capacity():
    memtable = Memtable(3)
    memtable.put(Entry.put(1, 1, b"v"))
    memtable.add_range_tombstone(RangeTombstone(0, 10, 2))
    assert not memtable.is_full()
    memtable.add_range_tombstone(RangeTombstone(5, 8, 3))
    assert memtable.is_full()

    assert memtable.covering_seq(6) == 3
    assert memtable.covering_seq(2) == 2
    assert memtable.covering_seq(10) == 0
    assert memtable.tombstones_overlapping(8, 20) == [RangeTombstone(0, 10, 2)]

    memtable.clear()
    assert len(memtable) == 0
    assert memtable.min_seq() is None


def test_memtable_range_queries():
    memtable = Memtable(16)
    for key in (9, 1, 5, 7):
        memtable.put(Entry.put(key, key, b"v"))
    assert [e.key for e in memtable.entries_in_range(2, 8)] == [5, 7]
    assert memtable.entries_in_range(10, 20) == []


# Sorted runs

@pytest.fixture
def run_entries():
    """20 entries on even keys, one tombstone among them."""
    entries = [Entry.put(k, 100 + k, bytes([k])) for k in range(0, 40, 2)]
    entries[3] = Entry.tombstone(6, 200)
    return entries


def test_entry_encoding_fills_slot(small_config):
    entry = Entry.put(77, 9, b"\x01\x02")
    encoded = encode_entry(entry, small_config)
    assert len(encoded) == small_config.entry_size
    assert decode_entry(encoded, 0, small_config.key_size) == entry

    with pytest.raises(ValueTooLargeError):
        encode_entry(Entry.put(1, 1, b"x" * (small_config.value_size + 1)), small_config)


def test_run_point_lookup_reads_one_block(tmp_path, small_config, run_entries):
    """Fences pick the single candidate block; absent keys inside bounds cost one read."""
    device = BlockDevice(small_config.block_size)
    run = SortedRun.write(tmp_path / "r.run", 1, run_entries, [], small_config, device)
    assert run.data_blocks == 3
    assert run.min_key == 0 and run.max_key == 38
    assert run.min_seq == 100 and run.max_seq == 200

    before = device.counters.snapshot()
    assert run.get(10).value == bytes([10])
    assert run.get(6).is_tombstone
    assert run.get(11) is None
    assert run.get(99) is None
    delta = device.counters - before
    assert delta.data_block_reads == 3

    print("✓ Sorted run point lookups read one block each")


def test_run_range_and_full_iteration(tmp_path, small_config, run_entries):
    device = BlockDevice(small_config.block_size)
    run = SortedRun.write(tmp_path / "r.run", 1, run_entries, [], small_config, device)
    assert [e.key for e in run.entries_in_range(10, 20)] == [10, 12, 14, 16, 18]
    assert list(run.entries_in_range(40, 50)) == []
    assert list(run.entries()) == run_entries
    assert len(run) == 20


def test_run_reopen(tmp_path, small_config, run_entries):
    """Header, fences and Bloom bits survive a reopen."""
    device = BlockDevice(small_config.block_size)
    path = tmp_path / "r.run"
    written = SortedRun.write(path, 2, run_entries, [RangeTombstone(1, 3, 300)], small_config, device)

    reopened = SortedRun.open(path, small_config, BlockDevice(small_config.block_size))
    assert reopened.level == 2
    assert reopened.fences == written.fences
    assert reopened.tombstone_count == 1
    assert reopened.max_seq == 300
    assert all(reopened.bloom_positive(e.key) for e in run_entries)
    assert reopened.get(30).value == bytes([30])


def test_run_rejects_foreign_file(tmp_path, small_config):
    path = tmp_path / "junk.run"
    path.write_bytes(b"\0" * small_config.block_size)
    with pytest.raises(CorruptFileError):
        SortedRun.open(path, small_config, BlockDevice(small_config.block_size))


def test_run_tombstone_probe(tmp_path, small_config):
    """Records starting before the key are examined; the newest covering seq wins."""
    device = BlockDevice(small_config.block_size)
    tombstones = [RangeTombstone(0, 10, 100), RangeTombstone(5, 15, 101), RangeTombstone(30, 40, 102)]
    run = SortedRun.write(tmp_path / "r.run", 1, [Entry.put(1, 1, b"v")], tombstones, small_config, device)

    before = device.counters.snapshot()
    assert run.probe_tombstones(12) == (101, 2)
    assert run.probe_tombstones(20) == (0, 2)
    assert run.probe_tombstones(3) == (100, 1)
    assert (device.counters - before).tombstone_block_reads == 3
    assert run.tombstones() == tombstones
