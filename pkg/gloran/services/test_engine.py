"""
Tests for the store engine: every range-delete strategy against the shadow
oracle, GLORAN's I/O guarantees, garbage collection and persistence.
"""

import tempfile
from pathlib import Path

import pytest
from hypothesis import given, strategies as st, settings

from gloran.bench.runner import TraceRunner
from gloran.conftest import make_small_config, mixed_trace
from gloran.models.config import Strategy
from gloran.models.entry import LookupOutcome
from gloran.models.operation import Operation
from gloran.services.engine import GloranStore, get_store, io_counters, open_store, reset_store
from gloran.services.lsm_store import LsmStore
from gloran.services.oracle import ShadowOracle

ALL_STRATEGIES = [s.value for s in Strategy]


def _value(key: int, version: int = 0) -> bytes:
    return key.to_bytes(2, "big") + bytes([version])


# Shadow oracle

def test_oracle_semantics():
    """The oracle itself: latest write wins, deletes hide keys."""
    oracle = ShadowOracle()
    for op in [
        Operation.update(1, b"a"),
        Operation.update(2, b"b"),
        Operation.update(5, b"c"),
        Operation.update(1, b"d"),
        Operation.delete(2),
        Operation.range_delete(4, 10),
        Operation.get(1),
    ]:
        oracle.apply(op)
    assert oracle.get(1) == b"d"
    assert oracle.get(2) is None
    assert oracle.get(5) is None
    assert oracle.scan(0, 10) == [(1, b"d")]
    assert oracle.live_keys() == [1]
    assert len(oracle) == 1


# Equivalence with the oracle

@pytest.mark.parametrize("strategy", ALL_STRATEGIES)
@pytest.mark.parametrize("seed", [1, 2])
def test_strategies_match_oracle(store_factory, strategy, seed):
    """Every G and S result equals the oracle's across flushes and compactions."""
    store = store_factory(strategy)
    runner = TraceRunner(store, verify=True)
    metrics = runner.replay(mixed_trace(seed, 700))

    assert metrics.mismatch_count == 0, metrics.mismatches
    assert store.stats.flushes > 0
    assert metrics.live_keys == len(runner.oracle)

    print(f"✓ {strategy} matches the oracle on seed {seed}")


def test_gloran_without_estimator_matches_oracle(store_factory):
    store = store_factory("GLORAN", eve_enabled=False)
    assert store.estimator is None
    metrics = TraceRunner(store, verify=True).replay(mixed_trace(3, 700))
    assert metrics.mismatch_count == 0
    assert metrics.eve_fpr is None


# Property 1: GLORAN agrees with the oracle on any random trace

@given(st.integers(0, 100_000), st.sampled_from([64, 256, 1024]))
@settings(max_examples=8, deadline=None)
def test_gloran_matches_oracle_property(seed, key_space):
    """
    Property: for random interleavings of puts, deletes, range deletes and
    reads, GLORAN answers exactly like the oracle.
    """
    with tempfile.TemporaryDirectory() as root:
        store = open_store(Path(root) / "s", make_small_config())
        try:
            metrics = TraceRunner(store, verify=True).replay(mixed_trace(seed, 400, key_space=key_space))
        finally:
            store.close()
    assert metrics.mismatch_count == 0


# GLORAN I/O behaviour

def _loaded_gloran(store_factory, **changes) -> GloranStore:
    store = store_factory("GLORAN", **changes)
    for key in range(300):
        store.put(key, _value(key))
    for lo in range(0, 300, 30):
        store.range_delete(lo, lo + 10)
    for key in range(300, 340):
        store.put(key, _value(key))
    return store


def test_range_delete_writes_no_lsm_data(store_factory):
    """A GLORAN range delete never writes LSM data blocks."""
    store = store_factory("GLORAN")
    for key in range(100):
        store.put(key, _value(key))
    counters = io_counters(store)
    for lo in range(0, 2000, 20):
        before = counters.snapshot()
        assert store.range_delete(lo, lo + 15) == 1
        assert (counters - before).data_block_writes == 0
    assert store.index.stats.flushes > 0
    assert counters.index_node_writes > 0


def test_absent_keys_cost_no_index_reads(store_factory):
    """Lookups that find nothing, or a point tombstone, never touch the index."""
    store = _loaded_gloran(store_factory)
    store.delete(150)
    counters = io_counters(store)
    before = counters.snapshot()
    checks = store.index.stats.checks
    for key in list(range(1000, 1200)) + [150]:
        assert not store.get(key).found
    assert (counters - before).index_node_reads == 0
    assert store.index.stats.checks == checks


def test_lookup_outcomes(store_factory):
    store = _loaded_gloran(store_factory)
    assert store.get(5).outcome == LookupOutcome.DELETED_BY_RANGE
    assert store.get(15).value == _value(15)
    assert store.get(320).found
    store.put(5, _value(5, 7))
    assert store.get(5).value == _value(5, 7)
    assert [k for k, _ in store.scan(0, 32)] == [5] + list(range(10, 30))


def test_estimator_clears_new_entries(store_factory):
    """Entries written after every range delete skip the index entirely."""
    store = _loaded_gloran(store_factory)
    checks = store.index.stats.checks
    for key in range(300, 340):
        assert store.get(key).found
    assert store.eve_valid == 40
    assert store.index.stats.checks == checks
    assert store.eve_fpr == 0.0


def test_estimator_false_positives_are_counted(store_factory):
    """A MaybeDeleted verdict the index refutes counts as a false positive."""
    store = _loaded_gloran(store_factory, eve_segment_width=64)
    for key in range(10, 30):
        assert store.get(key).found
    # ranges and survivors share 64-key segments
    assert store.eve_false_positives > 0
    assert store.eve_maybe >= store.eve_false_positives
    assert 0 < store.eve_fpr <= 1


def test_compaction_purges_covered_entries(store_factory):
    """Covered values are physically dropped once compaction passes over them."""
    store = _loaded_gloran(store_factory)
    store.index.flush_buffer()
    store.compact_all()
    stored = {e.key for run in store.lsm.runs() for e in run.entries()}
    for lo in range(0, 300, 30):
        assert not stored & set(range(lo, lo + 10))
    assert set(range(10, 30)) <= stored


def test_gc_purges_records_after_bottommost_compaction(store_factory):
    """Once every covered entry is gone the records are collected and reads stay correct."""
    store = store_factory("GLORAN")
    for key in range(100):
        store.put(key, _value(key))
    store.range_delete(0, 50)
    for key in range(200, 204):
        store.put(key, _value(key))
    store.index.flush_buffer()
    store.compact_all()

    assert store.index.watermark >= 101
    assert store.index.stats.gc_purged_leaves > 0
    assert store.index.record_count == 0
    for key in range(50):
        assert not store.get(key).found
    for key in range(50, 100):
        assert store.get(key).value == _value(key)

    print("✓ GC keeps lookups correct")


def test_record_floor_follows_watermark(store_factory):
    """New records start at min(watermark, oldest sequence in the tree)."""
    store = store_factory("GLORAN")
    for key in range(40):
        store.put(key, _value(key))
    store.range_delete(0, 4)
    area = store.index.buffer.areas()[0]
    assert area.seq_lo == min(store.index.watermark, store.lsm.oldest_sequence())
    assert area.seq_hi == 41


def test_watermark_candidate(store_factory):
    store = store_factory("GLORAN")
    assert store.watermark_candidate() == 0
    for key in range(10):
        store.put(key, b"v")
    assert store.watermark_candidate() == 0
    store.flush()
    assert store.watermark_candidate() == 10
    assert store.maybe_gc((0, 10)) == 0


def test_gloran_reopen(store_factory):
    """Index levels, watermark, sequence counter and estimator come back."""
    store = _loaded_gloran(store_factory)
    last_seq = store.sequencer.current
    records = store.index.record_count
    store.close()

    reopened = store_factory("GLORAN")
    assert isinstance(reopened, GloranStore)
    assert reopened.sequencer.current == last_seq
    assert reopened.index.record_count == records
    assert reopened.estimator.to_dict()["records"] >= 1
    assert not reopened.get(35).found
    assert reopened.get(45).value == _value(45)
    assert [k for k, _ in reopened.scan(60, 75)] == list(range(70, 75))


def test_existing_config_wins(tmp_path, small_config):
    """A store directory keeps the configuration it was created with."""
    store = open_store(tmp_path / "s", small_config.replace(strategy="LRR"))
    store.close()
    again = open_store(tmp_path / "s", small_config.replace(strategy="GLORAN"))
    assert isinstance(again, LsmStore)
    assert again.strategy == Strategy.LRR
    again.close()


def test_accounting(store_factory):
    store = _loaded_gloran(store_factory)
    memory = store.memory_bytes()
    assert set(memory) == {"bloom_and_fences", "write_buffer", "index_buffer", "eve"}
    assert memory["eve"] > 0
    assert store.disk_bytes() >= store.lsm.disk_bytes()
    stats = store.stats_dict()
    assert stats["index"]["records"] == 10
    assert "watermark" in stats["index"]
    assert stats["eve"]["records"] == 10


def test_process_store_singleton(served_store_env):
    """get_store opens one store under GLORAN_DATA_DIR with GLORAN_CONFIG."""
    store = get_store()
    assert get_store() is store
    assert store.root == served_store_env
    assert store.config.memtable_capacity == 32
    store.put(1, b"v")
    reset_store()
    assert get_store() is not store
    assert get_store().get(1).value == b"v"
