"""
Report emission: an aligned text table for people and a flat
``section.metric = value`` file for plotting scripts.
"""

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from gloran.bench.cost_model import CostParams, predict
from gloran.bench.runner import Metrics
from gloran.models.config import Strategy, format_flat_file, parse_flat_file
from gloran.utils.error_handling import ConfigError

logger = logging.getLogger(__name__)

MISSING = "n/a"

# (header, flattened metric key)
COLUMNS: Tuple[Tuple[str, str], ...] = (
    ("strategy", "run.strategy"),
    ("ops", "run.operations"),
    ("ops/s", "run.throughput"),
    ("norm", "normalized_throughput"),
    ("data rd/G", "per_op.data_reads_per_lookup"),
    ("tomb rd/G", "per_op.tombstone_reads_per_lookup"),
    ("idx rd/G", "per_op.index_reads_per_lookup"),
    ("idx wr/R", "per_op.index_writes_per_range_delete"),
    ("bloom fpr", "filters.bloom_fpr"),
    ("eve fpr", "filters.eve_fpr"),
    ("disk", "disk.bytes"),
    ("space amp", "disk.space_amplification"),
    ("G p99 ns", "latency.G.p99"),
    ("model G(V)", "model.lookup_valid"),
    ("mismatch", "verify.mismatches"),
)

Row = Dict[str, Any]


def format_value(value: Any) -> str:
    if value is None or value == "":
        return MISSING
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        if value != value:
            return MISSING
        return f"{value:.4g}"
    return str(value)


def _number(value: Any) -> Optional[float]:
    if value is None:
        return None
    try:
        return float(value)
    except (TypeError, ValueError):
        return None


def model_entries(strategy: str, params: Optional[CostParams]) -> Dict[str, float]:
    """Cost-model predictions for one strategy as ``model.<operation>`` keys."""
    if params is None:
        return {}
    predictions = predict(params, Strategy.parse(strategy))
    return {f"model.{op}": prediction.total for op, prediction in predictions.items()}


def metrics_row(metrics: Metrics, params: Optional[CostParams] = None) -> Row:
    row: Row = metrics.flatten()
    row.update(model_entries(metrics.strategy, params))
    return row


def normalize_throughput(rows: List[Row], baseline: Optional[str] = None) -> List[Row]:
    """
    Add ``normalized_throughput`` relative to the baseline strategy row
    (the first row when no baseline is named).
    """
    if not rows:
        return rows
    reference = rows[0]
    if baseline is not None:
        matches = [r for r in rows if str(r.get("run.strategy", "")).upper() == baseline.upper()]
        if not matches:
            raise ConfigError(f"baseline strategy {baseline} not among the reports")
        reference = matches[0]
    base = _number(reference.get("run.throughput"))
    for row in rows:
        value = _number(row.get("run.throughput"))
        row["normalized_throughput"] = value / base if value is not None and base else None
    return rows


def render_table(rows: Sequence[Row], columns: Sequence[Tuple[str, str]] = COLUMNS) -> str:
    """Aligned table, one row per run; absent metrics print as n/a."""
    cells = [[header for header, _ in columns]]
    for row in rows:
        line = []
        for _, key in columns:
            value = row.get(key)
            if key == "normalized_throughput" and _number(value) is not None:
                line.append(f"{float(value):.2f}x")
            else:
                line.append(format_value(value))
        cells.append(line)
    widths = [max(len(r[i]) for r in cells) for i in range(len(columns))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def write_report(path: Union[str, Path], row: Row) -> None:
    """One ``section.metric = value`` line per metric."""
    text = format_flat_file({key: format_value(value) for key, value in row.items()})
    Path(path).write_text(text, encoding="utf-8")
    logger.info(f"wrote report {path} ({len(row)} metrics)")


def read_report(path: Union[str, Path]) -> Row:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read report {path}: {e}", details={"path": str(path)}) from e
    row: Row = {}
    for key, raw in parse_flat_file(text, source=str(path)).items():
        if raw == MISSING:
            row[key] = None
        else:
            number = _number(raw)
            row[key] = raw if number is None else (int(number) if raw.lstrip("-").isdigit() else number)
    return row


def compare(paths: Sequence[Union[str, Path]], baseline: Optional[str] = None) -> str:
    rows = normalize_throughput([read_report(p) for p in paths], baseline)
    return render_table(rows)
