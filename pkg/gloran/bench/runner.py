"""
Trace replay with I/O metric capture.

Every operation is timed and the block device counters are snapshotted
around it, so I/O can be attributed to the operation kind that caused it.
"""

import logging
import shutil
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union

import numpy as np

from gloran.models.config import Strategy, StoreConfig
from gloran.models.operation import OpKind, Operation
from gloran.services.block_device import IOCounters
from gloran.services.engine import GloranStore, Store, open_store
from gloran.services.oracle import ShadowOracle
from gloran.utils.error_handling import ConfigError

logger = logging.getLogger(__name__)

# mismatches kept verbatim in a verify report
MAX_MISMATCH_SAMPLES = 10


@dataclass
class Mismatch:
    line: int
    op: str
    expected: str
    actual: str

    def to_dict(self) -> Dict[str, Any]:
        return {"line": self.line, "op": self.op, "expected": self.expected, "actual": self.actual}


@dataclass
class Metrics:
    """
    Result of one trace replay.

    Sections flatten to ``section.metric`` keys for the report file; a
    missing value is None and prints as ``n/a``.
    """
    strategy: str
    op_counts: Dict[str, int] = field(default_factory=dict)
    elapsed_seconds: float = 0.0
    latency_ns: Dict[str, Dict[str, float]] = field(default_factory=dict)
    io: Dict[str, int] = field(default_factory=dict)
    io_by_op: Dict[str, Dict[str, int]] = field(default_factory=dict)
    bloom_fpr: Optional[float] = None
    eve_fpr: Optional[float] = None
    disk_bytes: int = 0
    index_bytes: int = 0
    live_keys: Optional[int] = None
    memory_bytes: Dict[str, int] = field(default_factory=dict)
    index: Dict[str, Any] = field(default_factory=dict)
    audit: Dict[str, int] = field(default_factory=dict)
    range_records_examined: int = 0
    verified: bool = False
    mismatches: List[Mismatch] = field(default_factory=list)
    mismatch_count: int = 0
    entry_size: int = 0

    @property
    def operations(self) -> int:
        return sum(self.op_counts.values())

    @property
    def throughput(self) -> Optional[float]:
        if not self.operations or self.elapsed_seconds <= 0:
            return None
        return self.operations / self.elapsed_seconds

    def _per(self, kind: OpKind, counter: str) -> Optional[float]:
        count = self.op_counts.get(kind.value, 0)
        if not count:
            return None
        return self.io_by_op.get(kind.value, {}).get(counter, 0) / count

    @property
    def tombstone_reads_per_lookup(self) -> Optional[float]:
        return self._per(OpKind.GET, "tombstone_block_reads")

    @property
    def index_reads_per_lookup(self) -> Optional[float]:
        return self._per(OpKind.GET, "index_node_reads")

    @property
    def data_reads_per_lookup(self) -> Optional[float]:
        return self._per(OpKind.GET, "data_block_reads")

    @property
    def index_writes_per_range_delete(self) -> Optional[float]:
        return self._per(OpKind.RANGE_DELETE, "index_node_writes")

    @property
    def data_writes_per_range_delete(self) -> Optional[float]:
        return self._per(OpKind.RANGE_DELETE, "data_block_writes")

    @property
    def records_examined_per_lookup(self) -> Optional[float]:
        count = self.op_counts.get(OpKind.GET.value, 0)
        return self.range_records_examined / count if count else None

    @property
    def space_amplification(self) -> Optional[float]:
        if not self.live_keys or not self.entry_size:
            return None
        return self.disk_bytes / (self.live_keys * self.entry_size)

    def sections(self) -> Dict[str, Dict[str, Any]]:
        sections: Dict[str, Dict[str, Any]] = {
            "run": {
                "strategy": self.strategy,
                "operations": self.operations,
                "elapsed_seconds": round(self.elapsed_seconds, 6),
                "throughput": self.throughput,
            },
            "ops": dict(self.op_counts),
            "io": dict(self.io),
            "per_op": {
                "data_reads_per_lookup": self.data_reads_per_lookup,
                "tombstone_reads_per_lookup": self.tombstone_reads_per_lookup,
                "index_reads_per_lookup": self.index_reads_per_lookup,
                "records_examined_per_lookup": self.records_examined_per_lookup,
                "index_writes_per_range_delete": self.index_writes_per_range_delete,
                "data_writes_per_range_delete": self.data_writes_per_range_delete,
            },
            "filters": {"bloom_fpr": self.bloom_fpr, "eve_fpr": self.eve_fpr},
            "memory": dict(self.memory_bytes),
            "disk": {
                "bytes": self.disk_bytes,
                "index_bytes": self.index_bytes,
                "live_keys": self.live_keys,
                "space_amplification": self.space_amplification,
            },
            "index": dict(self.index),
            "audit": dict(self.audit),
        }
        for kind, stats in self.latency_ns.items():
            sections[f"latency.{kind}"] = dict(stats)
        if self.verified:
            sections["verify"] = {"mismatches": self.mismatch_count}
        return sections

    def flatten(self) -> Dict[str, Any]:
        return {
            f"{section}.{name}": value
            for section, values in self.sections().items()
            for name, value in values.items()
        }


def summarize_latencies(samples: Dict[str, List[int]]) -> Dict[str, Dict[str, float]]:
    """Mean and P50/P95/P99 per operation kind, in nanoseconds."""
    summary = {}
    for kind, values in samples.items():
        if not values:
            continue
        array = np.asarray(values, dtype=np.float64)
        p50, p95, p99 = np.percentile(array, [50, 95, 99])
        summary[kind] = {
            "mean": float(array.mean()),
            "p50": float(p50),
            "p95": float(p95),
            "p99": float(p99),
        }
    return summary


def _describe(value: Optional[bytes]) -> str:
    return "NotFound" if value is None else value.hex()


def _apply(store: Store, op: Operation) -> Any:
    if op.kind == OpKind.UPDATE:
        return store.put(op.key, op.value)
    if op.kind == OpKind.GET:
        return store.get(op.key)
    if op.kind == OpKind.DELETE:
        return store.delete(op.key)
    if op.kind == OpKind.RANGE_DELETE:
        return store.range_delete(op.lo, op.hi)
    return store.scan(op.lo, op.hi)


class TraceRunner:
    """Replays operations against one store and collects Metrics."""

    def __init__(self, store: Store, verify: bool = False):
        self.store = store
        self.oracle = ShadowOracle() if verify else None
        self.metrics = Metrics(strategy=store.strategy.value, verified=verify,
                               entry_size=store.config.entry_size)
        self._latencies: Dict[str, List[int]] = {}
        self._io_by_op: Dict[str, IOCounters] = {}
        self._start = store.device.counters.snapshot()

    def _check(self, number: int, op: Operation, result: Any) -> None:
        if op.kind == OpKind.GET:
            expected = self.oracle.get(op.key)
            actual = result.value if result.found else None
            if expected != actual:
                self._mismatch(number, op, _describe(expected), _describe(actual))
        elif op.kind == OpKind.SCAN:
            expected = self.oracle.scan(op.lo, op.hi)
            if expected != result:
                self._mismatch(number, op, f"{len(expected)} pairs", f"{len(result)} pairs")

    def _mismatch(self, number: int, op: Operation, expected: str, actual: str) -> None:
        self.metrics.mismatch_count += 1
        if len(self.metrics.mismatches) < MAX_MISMATCH_SAMPLES:
            self.metrics.mismatches.append(Mismatch(number, op.to_line(), expected, actual))
        logger.warning(f"mismatch at op {number} ({op.to_line()}): expected {expected}, got {actual}")

    def execute(self, number: int, op: Operation) -> None:
        counters = self.store.device.counters
        before = counters.snapshot()
        started = time.perf_counter_ns()
        result = _apply(self.store, op)
        elapsed = time.perf_counter_ns() - started
        delta = counters - before

        kind = op.kind.value
        self._latencies.setdefault(kind, []).append(elapsed)
        self.metrics.op_counts[kind] = self.metrics.op_counts.get(kind, 0) + 1
        total = self._io_by_op.setdefault(kind, IOCounters())
        for name, blocks in delta.to_dict().items():
            setattr(total, name, getattr(total, name) + blocks)

        if self.oracle is not None:
            self.oracle.apply(op)
            self._check(number, op, result)

    def replay(self, operations: Iterable[Operation]) -> Metrics:
        started = time.perf_counter()
        for number, op in enumerate(operations, start=1):
            self.execute(number, op)
        self.metrics.elapsed_seconds = time.perf_counter() - started
        return self.finish()

    def finish(self) -> Metrics:
        """Capture counters and structure sizes before the store is closed."""
        store, metrics = self.store, self.metrics
        metrics.io = (store.device.counters - self._start).to_dict()
        metrics.io_by_op = {kind: counters.to_dict() for kind, counters in self._io_by_op.items()}
        metrics.latency_ns = summarize_latencies(self._latencies)
        metrics.bloom_fpr = store.stats.bloom_fpr
        metrics.range_records_examined = store.stats.range_records_examined
        metrics.disk_bytes = store.disk_bytes()
        metrics.memory_bytes = {"index_buffer": 0, "eve": 0}
        metrics.memory_bytes.update(store.memory_bytes())

        if isinstance(store, GloranStore):
            metrics.eve_fpr = store.eve_fpr
            metrics.index_bytes = store.index.disk_bytes()
            index_stats = store.index.stats
            metrics.index = dict(store.index.node_counts())
            metrics.index["watermark"] = store.index.watermark
            metrics.index["records"] = index_stats.records
            metrics.index["max_node_accesses"] = index_stats.max_node_accesses
            metrics.audit = {
                "access_bound_violations": index_stats.access_bound_violations,
                "height_violations": index_stats.height_violations,
                "space_bound_violations": index_stats.space_bound_violations,
                "gc_runs": index_stats.gc_runs,
                "gc_purged_leaves": index_stats.gc_purged_leaves,
            }

        if self.oracle is not None:
            metrics.live_keys = len(self.oracle)
        else:
            # after the counter capture, so the scan is not charged to the run
            metrics.live_keys = len(store.scan(0, store.config.universe))
        return metrics


def prepare_store_dir(path: Union[str, Path], fresh: bool = False) -> Path:
    """
    Check that a store directory is new or empty.

    Raises:
        ConfigError: If it holds files and ``fresh`` is not set
    """
    path = Path(path)
    if path.exists() and any(path.iterdir()):
        if not fresh:
            raise ConfigError(f"store directory {path} is not empty", details={"path": str(path)})
        shutil.rmtree(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def run(
    operations: Iterable[Operation],
    strategy: Union[Strategy, str],
    config: StoreConfig,
    store_dir: Union[str, Path],
    verify: bool = False,
    fresh: bool = False,
) -> Metrics:
    """
    Replay operations on a fresh store under ``strategy`` and return Metrics.

    The store is closed afterwards and its directory kept for inspection.
    """
    if not isinstance(strategy, Strategy):
        strategy = Strategy.parse(strategy)
    root = prepare_store_dir(store_dir, fresh=fresh)
    store = open_store(root, config.replace(strategy=strategy.value))
    runner = TraceRunner(store, verify=verify)
    try:
        metrics = runner.replay(operations)
    finally:
        store.close()
    logger.info(
        f"{strategy.value}: {metrics.operations} ops in {metrics.elapsed_seconds:.2f}s, "
        f"{metrics.io.get('data_block_reads', 0)} data reads"
    )
    return metrics
