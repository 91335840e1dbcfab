"""
Parameter sweeps.

``sweep_records`` fixes the data size and varies the number of range
records Q, comparing LRR tombstone-block reads per lookup against GLORAN
index node reads per lookup. ``eve_fpr_sweep`` measures the estimator's false
positive rate across bits-per-record settings.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from gloran.bench.cost_model import fit_coefficient
from gloran.bench.runner import Metrics, run
from gloran.models.config import Strategy, StoreConfig
from gloran.models.operation import Operation
from gloran.services.eve import EVE, Verdict

logger = logging.getLogger(__name__)


def linear_fit(x: Sequence[float], y: Sequence[float]) -> Tuple[float, float, float]:
    """Least-squares line; returns (slope, intercept, R^2)."""
    xs = np.asarray(x, dtype=np.float64)
    ys = np.asarray(y, dtype=np.float64)
    slope, intercept = np.polyfit(xs, ys, 1)
    residual = ys - (slope * xs + intercept)
    total = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 - float(np.sum(residual ** 2)) / total if total > 0 else 1.0
    return float(slope), float(intercept), r2


def record_sweep_trace(
    entries: int,
    records: int,
    lookups: int,
    universe: int,
    range_length: int,
    seed: int = 7,
) -> List[Operation]:
    """
    ``entries`` puts with ``records`` range deletes spread evenly among them,
    followed by ``lookups`` uniform point lookups.
    """
    rng = np.random.default_rng(seed)
    keys = rng.integers(0, universe, size=entries, dtype=np.int64)
    starts = rng.integers(0, universe - range_length + 1, size=records, dtype=np.int64)
    probes = rng.integers(0, universe, size=lookups, dtype=np.int64)
    value = b"\x5a" * 8

    # range deletes issued before put i
    positions = np.linspace(0, max(entries - 1, 0), num=records, dtype=np.int64)
    before = np.bincount(positions, minlength=max(entries, 1))

    operations: List[Operation] = []
    issued = 0
    for i in range(max(entries, 1)):
        for _ in range(int(before[i])):
            lo = int(starts[issued])
            operations.append(Operation.range_delete(lo, lo + range_length))
            issued += 1
        if i < entries:
            operations.append(Operation.update(int(keys[i]), value))
    operations.extend(Operation.get(int(key)) for key in probes)
    return operations


@dataclass
class SweepPoint:
    records: int
    lrr_tombstone_reads: Optional[float]
    lrr_records_examined: Optional[float]
    gloran_index_reads: Optional[float]


@dataclass
class SweepResult:
    points: List[SweepPoint] = field(default_factory=list)
    lrr_fit: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    gloran_log2_coefficient: float = 0.0
    gloran_max_residual: float = 0.0

    def to_dict(self) -> Dict[str, object]:
        slope, intercept, r2 = self.lrr_fit
        data: Dict[str, object] = {
            "fit.lrr_slope": slope,
            "fit.lrr_intercept": intercept,
            "fit.lrr_r2": r2,
            "fit.gloran_log2_coefficient": self.gloran_log2_coefficient,
            "fit.gloran_max_residual": self.gloran_max_residual,
        }
        for p in self.points:
            data[f"q{p.records}.lrr_tombstone_reads_per_lookup"] = p.lrr_tombstone_reads
            data[f"q{p.records}.lrr_records_examined_per_lookup"] = p.lrr_records_examined
            data[f"q{p.records}.gloran_index_reads_per_lookup"] = p.gloran_index_reads
        return data


def sweep_records(
    config: StoreConfig,
    root: Union[str, Path],
    entries: int,
    record_counts: Sequence[int],
    lookups: int = 10_000,
    range_length: int = 128,
    seed: int = 7,
) -> SweepResult:
    """Run LRR and GLORAN on one trace per record count."""
    root = Path(root)
    result = SweepResult()
    for q in record_counts:
        trace = record_sweep_trace(entries, q, lookups, config.universe, range_length, seed)
        measured: Dict[Strategy, Metrics] = {}
        for strategy in (Strategy.LRR, Strategy.GLORAN):
            measured[strategy] = run(trace, strategy, config, root / f"q{q}-{strategy.value.lower()}", fresh=True)
        lrr, gloran = measured[Strategy.LRR], measured[Strategy.GLORAN]
        point = SweepPoint(
            q,
            lrr.tombstone_reads_per_lookup,
            lrr.records_examined_per_lookup,
            gloran.index_reads_per_lookup,
        )
        result.points.append(point)
        logger.info(
            f"Q={q}: LRR {point.lrr_tombstone_reads} tombstone reads/lookup, "
            f"GLORAN {point.gloran_index_reads} index reads/lookup"
        )

    qs = [p.records for p in result.points]
    lrr_reads = [p.lrr_tombstone_reads or 0.0 for p in result.points]
    gloran_reads = [p.gloran_index_reads or 0.0 for p in result.points]
    if len(qs) >= 2:
        result.lrr_fit = linear_fit(qs, lrr_reads)
    log2 = [math.log2(q) ** 2 if q > 1 else 0.0 for q in qs]
    result.gloran_log2_coefficient = fit_coefficient(gloran_reads, log2)
    if qs:
        result.gloran_max_residual = max(
            abs(m - result.gloran_log2_coefficient * x) for m, x in zip(gloran_reads, log2)
        )
    return result


@dataclass
class FprPoint:
    bits_per_record: float
    probes: int
    negatives: int
    false_positives: int
    false_negatives: int
    segment_fpr: float = 0.0
    expected_fpr: float = 0.0

    @property
    def fpr(self) -> Optional[float]:
        return self.false_positives / self.negatives if self.negatives else None


def touched_segments(starts: np.ndarray, length: int, width: int, universe: int) -> np.ndarray:
    """Per segment, whether any [s, s + length) reaches into it."""
    count = universe // width + 1
    marks = np.zeros(count + 1, dtype=np.int64)
    np.add.at(marks, starts // width, 1)
    np.add.at(marks, (starts + length - 1) // width + 1, -1)
    return np.cumsum(marks)[:count] > 0


def expected_fpr(eve: EVE, segment_fpr: float) -> float:
    """
    Negatives in a touched segment always test positive; the rest pass
    only if some estimator's filter answers a false positive, which a filter
    with fill ratio f and k hashes does with probability f^k.
    """
    miss = 1.0
    for rae in eve.chain:
        if rae.count:
            miss *= 1.0 - rae.bloom.fill_ratio ** rae.bloom.num_hashes
    return segment_fpr + (1.0 - segment_fpr) * (1.0 - miss)


def _merge_intervals(starts: np.ndarray, length: int) -> Tuple[np.ndarray, np.ndarray]:
    """Union of [s, s + length) intervals as sorted disjoint (lo, hi) arrays."""
    los: List[int] = []
    his: List[int] = []
    for s in np.sort(starts):
        s = int(s)
        if his and s <= his[-1]:
            his[-1] = max(his[-1], s + length)
        else:
            los.append(s)
            his.append(s + length)
    return np.asarray(los, dtype=np.int64), np.asarray(his, dtype=np.int64)


def covered_mask(keys: np.ndarray, los: np.ndarray, his: np.ndarray) -> np.ndarray:
    """Whether each key falls inside one of the disjoint intervals."""
    if len(los) == 0:
        return np.zeros(len(keys), dtype=bool)
    index = np.searchsorted(los, keys, side="right") - 1
    inside = index >= 0
    clipped = np.clip(index, 0, len(his) - 1)
    return inside & (keys < his[clipped])


def eve_fpr_sweep(
    bits_values: Sequence[float],
    records: int = 10_000,
    probes: int = 100_000,
    universe: int = 1 << 20,
    range_length: int = 128,
    first_capacity: int = 1 << 10,
    segment_width: Optional[int] = None,
    seed: int = 11,
) -> List[FprPoint]:
    """
    Insert the same random ranges under each setting and look up random plus
    boundary keys with entry seq 0, so every estimator epoch is consulted.
    """
    rng = np.random.default_rng(seed)
    starts = rng.integers(0, universe - range_length + 1, size=records, dtype=np.int64)
    boundaries = np.concatenate([starts - 1, starts, starts + range_length - 1, starts + range_length])
    keys = np.concatenate([rng.integers(0, universe, size=probes, dtype=np.int64), boundaries])
    keys = keys[(keys >= 0) & (keys < universe)]
    los, his = _merge_intervals(starts, range_length)
    truth = covered_mask(keys, los, his)
    width = segment_width or StoreConfig(universe=universe).segment_width
    in_touched = touched_segments(starts, range_length, width, universe)[keys // width] & ~truth
    negatives = int(np.sum(~truth))
    segment_fpr = float(np.sum(in_touched)) / negatives if negatives else 0.0

    points = []
    for bits in bits_values:
        eve = EVE(first_capacity, width, bits)
        for seq, lo in enumerate(starts, start=1):
            eve.insert(int(lo), int(lo) + range_length, seq)
        maybe = np.fromiter(
            (eve.query(int(k), 0) == Verdict.MAYBE_DELETED for k in keys), dtype=bool, count=len(keys)
        )
        point = FprPoint(
            bits_per_record=bits,
            probes=len(keys),
            negatives=negatives,
            false_positives=int(np.sum(maybe & ~truth)),
            false_negatives=int(np.sum(~maybe & truth)),
            segment_fpr=segment_fpr,
            expected_fpr=expected_fpr(eve, segment_fpr),
        )
        points.append(point)
        logger.info(
            f"EVE bits={bits}: fpr {point.fpr}, expected {point.expected_fpr:.4f}, "
            f"false negatives {point.false_negatives}"
        )
    return points
