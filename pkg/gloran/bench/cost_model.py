"""
Analytical I/O cost calculator.

Evaluates the closed-form costs of every range-delete strategy without
big-O constants. Each prediction is a sum of named terms so callers can see
which structures contribute; a fit coefficient per (strategy, operation)
scales the total and can be fitted from measured runs.

All logarithms of the LSM-tree are base T, those of the index base T', and
those inside a DR-tree base D.
"""

import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Sequence, Union

import numpy as np

from gloran.models.config import (
    DRTREE_NODE_HEADER,
    Strategy,
    StoreConfig,
    drtree_slot_size,
    parse_flat_file
)
from gloran.utils.error_handling import ConfigError

OPERATIONS = (
    "update",
    "point_delete",
    "range_delete",
    "lookup_valid",
    "lookup_nonexistent",
    "lookup_obsolete",
)


@dataclass(frozen=True)
class CostParams:
    """
    Inputs of the cost model.

    ``lam`` is the inverse range-delete ratio: N / lam range records for N
    entries. ``math.inf`` means no range deletes.
    """
    N: float
    F: float = 4096
    T: float = 10
    B: float = 4096
    k: float = 8
    e: float = 64
    lam: float = math.inf
    phi: float = 0.0082
    eps: float = 0.01
    D: float = 10
    F_index: float = 256
    T_index: float = 10
    range_length: float = 128
    coefficients: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        for f in fields(self):
            if f.name == "coefficients":
                continue
            value = getattr(self, f.name)
            if f.name in ("phi", "eps"):
                if not 0 <= value <= 1:
                    raise ConfigError(f"{f.name} is a rate in [0, 1], got {value}")
            elif not value > 0:
                raise ConfigError(f"cost parameter {f.name} must be positive, got {value}")
        if self.T < 2 or self.T_index < 2 or self.D < 2:
            raise ConfigError("T, T_index and D must be >= 2")

    @classmethod
    def from_config(cls, config: StoreConfig, N: float, **overrides: Any) -> "CostParams":
        values = dict(
            N=N,
            F=config.memtable_capacity,
            T=config.size_ratio,
            B=config.block_size,
            k=config.key_size,
            e=config.entry_size,
            phi=0.6185 ** config.bloom_bits_per_entry,
            D=config.drtree_fanout,
            F_index=config.index_buffer_capacity,
            T_index=config.index_size_ratio,
        )
        values.update(overrides)
        return cls(**values)

    @classmethod
    def from_dict(cls, data: Dict[str, str]) -> "CostParams":
        known = {f.name for f in fields(cls)} - {"coefficients"}
        values: Dict[str, Any] = {}
        coefficients: Dict[str, float] = {}
        for name, raw in data.items():
            try:
                number = float(raw)
            except ValueError as e:
                raise ConfigError(f"invalid value for {name}: {raw!r}", details={"key": name}) from e
            if name.startswith("coef."):
                coefficients[name[len("coef."):]] = number
            elif name in known:
                values[name] = number
            else:
                raise ConfigError(f"unknown cost parameter '{name}'", details={"key": name})
        if "N" not in values:
            raise ConfigError("cost parameters need N")
        return cls(coefficients=coefficients, **values)

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "CostParams":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot read cost parameters {path}: {e}", details={"path": str(path)}) from e
        return cls.from_dict(parse_flat_file(text, source=str(path)))

    # Derived quantities

    @property
    def levels(self) -> float:
        """L = log_T(N / F), at least one level."""
        return max(1.0, math.log(self.N / self.F, self.T))

    @property
    def records(self) -> float:
        """Q = N / lam."""
        return 0.0 if math.isinf(self.lam) else self.N / self.lam

    @property
    def index_levels(self) -> int:
        """L' levels of F' * T'^i records needed to hold Q."""
        if self.records <= 0:
            return 0
        levels, held = 0, 0.0
        while held < self.records:
            levels += 1
            held += self.F_index * self.T_index ** levels
        return levels

    def index_level_records(self) -> List[float]:
        """Q_i for i = 1..L'."""
        return [self.F_index * self.T_index ** i for i in range(1, self.index_levels + 1)]

    def coefficient(self, strategy: Strategy, operation: str) -> float:
        return self.coefficients.get(f"{strategy.value}.{operation}", 1.0)


@dataclass(frozen=True)
class Prediction:
    strategy: Strategy
    operation: str
    terms: Dict[str, float]
    coefficient: float = 1.0

    @property
    def total(self) -> float:
        return self.coefficient * sum(self.terms.values())


def _lookup_terms(p: CostParams, found: bool) -> Dict[str, float]:
    """Data-block cost of a plain LSM lookup."""
    if found:
        return {"data_blocks": float(math.ceil(p.phi * p.levels))}
    return {"bloom_false_positives": p.phi * p.levels}


def _rewrite_cost(p: CostParams, width: float) -> float:
    """An item of ``width`` bytes rewritten across T * L compactions."""
    return p.T * p.levels * width / p.B


def lrr_costs(p: CostParams) -> Dict[str, Dict[str, float]]:
    tombstone_scan = p.records * p.k / p.B
    return {
        "update": {"compaction": _rewrite_cost(p, p.e)},
        "point_delete": {"compaction": _rewrite_cost(p, p.k)},
        "range_delete": {"compaction": _rewrite_cost(p, p.k)},
        "lookup_valid": {
            "tombstone_scan": tombstone_scan,
            "tombstone_first_blocks": p.levels,
            "bloom_false_positives": p.phi * p.levels,
            "data_blocks": 1.0,
        },
        "lookup_nonexistent": {
            "tombstone_scan": tombstone_scan,
            "tombstone_first_blocks": p.levels,
            "bloom_false_positives": p.phi * p.levels,
        },
        "lookup_obsolete": {
            "tombstone_scan": tombstone_scan,
            "tombstone_first_blocks": p.levels,
            "bloom_false_positives": p.phi * p.levels,
        },
    }


def index_check_cost(p: CostParams) -> float:
    """Sum over index levels of (log_D Q_i + 1)."""
    return sum(max(0.0, math.log(q, p.D)) + 1.0 for q in p.index_level_records())


def index_area_bytes(p: CostParams) -> float:
    """
    On-disk bytes per effective area, internal nodes included.

    A packed tree over n areas has about n / (D - 1) nodes of D slots, and
    nodes are stored B // node_size to a block.
    """
    node = DRTREE_NODE_HEADER + p.D * drtree_slot_size(p.k)
    per_block = max(1.0, math.floor(p.B / node))
    return p.B / per_block / (p.D - 1)


def index_insert_terms(p: CostParams) -> Dict[str, float]:
    """
    Amortized index writes per range record, the (k / B) * T' * log_T'(Q / F')
    shape with the record width and rewrite count of the packed layout.

    Leveling rewrites an area about (T' + 1) / 2 times per level it passes
    through. Every tree build also writes a header block and on average half
    a block of padding, and each buffer flush builds T' / (T' - 1) trees
    counting the cascade.
    """
    passes = max(0.0, math.log(p.records / p.F_index, p.T_index)) if p.records > 0 else 0.0
    rewrites = (p.T_index + 1) / 2 * passes
    builds = p.T_index / (p.T_index - 1) / p.F_index
    return {
        "index_compaction": index_area_bytes(p) / p.B * rewrites,
        "index_build_overhead": 1.5 * builds,
    }


def index_insert_cost(p: CostParams) -> float:
    return sum(index_insert_terms(p).values())


def gloran_costs(p: CostParams) -> Dict[str, Dict[str, float]]:
    index = index_check_cost(p)
    return {
        "update": {"compaction": _rewrite_cost(p, p.e)},
        "point_delete": {"compaction": _rewrite_cost(p, p.k)},
        "range_delete": index_insert_terms(p),
        "lookup_valid": {
            "index": p.eps * index,
            "data_blocks": float(math.ceil(p.phi * p.levels)),
        },
        "lookup_nonexistent": {"bloom_false_positives": p.phi * p.levels},
        "lookup_obsolete": {
            "index": index,
            "data_blocks": float(math.ceil(p.phi * p.levels)),
        },
    }


def point_method_costs(p: CostParams, strategy: Strategy) -> Dict[str, Dict[str, float]]:
    """DECOMP, LOOKUP_DELETE and SCAN_DELETE: a range delete becomes point tombstones."""
    tombstones = p.range_length * _rewrite_cost(p, p.k)
    if strategy == Strategy.DECOMP:
        range_delete = {"tombstones": tombstones}
    elif strategy == Strategy.LOOKUP_DELETE:
        range_delete = {"lookups": p.range_length * math.ceil(p.phi * p.levels), "tombstones": tombstones}
    else:
        range_delete = {
            "scan": p.levels * (1 + p.range_length * p.e / p.B),
            "tombstones": tombstones,
        }
    return {
        "update": {"compaction": _rewrite_cost(p, p.e)},
        "point_delete": {"compaction": _rewrite_cost(p, p.k)},
        "range_delete": range_delete,
        "lookup_valid": _lookup_terms(p, True),
        "lookup_nonexistent": _lookup_terms(p, False),
        # stops at the point tombstone
        "lookup_obsolete": _lookup_terms(p, True),
    }


def predict(p: CostParams, strategy: Strategy) -> Dict[str, Prediction]:
    if strategy == Strategy.LRR:
        table = lrr_costs(p)
    elif strategy == Strategy.GLORAN:
        table = gloran_costs(p)
    else:
        table = point_method_costs(p, strategy)
    return {
        op: Prediction(strategy, op, terms, p.coefficient(strategy, op))
        for op, terms in table.items()
    }


def cost_model(p: CostParams) -> Dict[str, Dict[str, float]]:
    """Predicted I/Os per operation kind per strategy."""
    return {
        strategy.value: {op: prediction.total for op, prediction in predict(p, strategy).items()}
        for strategy in Strategy
    }


def node_bound(q: float, D: float) -> float:
    """Upper bound on DR-tree nodes holding the 2q areas of q records."""
    return D / (D - 1) * 2 * q


def fit_coefficient(measured: Sequence[float], predicted: Sequence[float]) -> float:
    """Least-squares scale c minimizing |measured - c * predicted|."""
    m = np.asarray(measured, dtype=np.float64)
    x = np.asarray(predicted, dtype=np.float64)
    denominator = float(np.dot(x, x))
    if denominator == 0:
        return 1.0
    return float(np.dot(m, x) / denominator)
