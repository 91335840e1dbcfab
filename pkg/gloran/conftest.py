"""
Shared pytest fixtures for gloran.

Stores under test use a deliberately tiny geometry (32-entry memtable,
256-byte blocks, 4-area index buffer) so a few hundred operations exercise
flushes, cascading compactions, index merges and garbage collection.
"""

from typing import Callable, List

import numpy as np
import pytest

from gloran.models.config import StoreConfig
from gloran.models.operation import Operation
from gloran.services.engine import open_store, reset_store


def make_small_config(**changes) -> StoreConfig:
    settings = dict(
        memtable_capacity=32,
        size_ratio=3,
        block_size=256,
        key_size=4,
        entry_size=32,
        universe=1 << 12,
        index_buffer_capacity=4,
        index_size_ratio=2,
        drtree_fanout=4,
        eve_first_capacity=8,
        rtree_node_capacity=4,
        max_range_expansion=1 << 12,
    )
    settings.update(changes)
    return StoreConfig(**settings)


def mixed_trace(seed: int, count: int, key_space: int = 256, max_range: int = 32) -> List[Operation]:
    """Random mix of every operation kind over a small key space."""
    rng = np.random.default_rng(seed)
    kinds = rng.choice(5, size=count, p=[0.45, 0.25, 0.08, 0.12, 0.10])
    operations = []
    for i, kind in enumerate(kinds):
        key = int(rng.integers(0, key_space))
        if kind == 0:
            operations.append(Operation.update(key, i.to_bytes(4, "big") + bytes([seed % 256])))
        elif kind == 1:
            operations.append(Operation.get(key))
        elif kind == 2:
            operations.append(Operation.delete(key))
        else:
            length = int(rng.integers(1, max_range + 1))
            lo = min(key, key_space - length)
            if kind == 3:
                operations.append(Operation.range_delete(lo, lo + length))
            else:
                operations.append(Operation.scan(lo, lo + length))
    return operations


@pytest.fixture
def small_config() -> StoreConfig:
    """Tiny geometry shared by store tests."""
    return make_small_config()


@pytest.fixture
def store_factory(tmp_path, small_config) -> Callable:
    """Open stores under tmp_path; every store is closed at teardown."""
    opened = []

    def _open(strategy: str = "GLORAN", name: str = None, **changes):
        config = small_config.replace(strategy=strategy, **changes)
        store = open_store(tmp_path / (name or strategy.lower()), config)
        opened.append(store)
        return store

    yield _open

    for store in opened:
        store.close()


@pytest.fixture
def served_store_env(tmp_path, monkeypatch, small_config):
    """Point the HTTP store singleton at a fresh directory with the tiny geometry."""
    config_file = tmp_path / "store.txt"
    small_config.to_file(config_file)
    monkeypatch.setenv("GLORAN_DATA_DIR", str(tmp_path / "data"))
    monkeypatch.setenv("GLORAN_CONFIG", str(config_file))
    reset_store()
    yield tmp_path / "data" / "kv"
    reset_store()
