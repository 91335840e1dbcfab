"""
Tests for report formatting, normalized throughput and report files.
"""

import math

import pytest

from gloran.bench.cost_model import CostParams
from gloran.bench.report import (
    MISSING,
    compare,
    format_value,
    metrics_row,
    normalize_throughput,
    read_report,
    render_table,
    write_report,
)
from gloran.bench.runner import Metrics
from gloran.utils.error_handling import ConfigError


def test_format_value():
    assert format_value(None) == MISSING
    assert format_value(math.nan) == MISSING
    assert format_value(True) == "true"
    assert format_value(0.123456) == "0.1235"
    assert format_value(42) == "42"
    assert format_value("LRR") == "LRR"


def test_normalized_throughput():
    rows = [
        {"run.strategy": "LRR", "run.throughput": 100.0},
        {"run.strategy": "GLORAN", "run.throughput": 250.0},
        {"run.strategy": "DECOMP", "run.throughput": None},
    ]
    normalize_throughput(rows)
    assert [r["normalized_throughput"] for r in rows] == [1.0, 2.5, None]

    normalize_throughput(rows, baseline="gloran")
    assert rows[0]["normalized_throughput"] == pytest.approx(0.4)

    with pytest.raises(ConfigError):
        normalize_throughput(rows, baseline="SCAN_DELETE")
    assert normalize_throughput([]) == []


def test_table_marks_missing_metrics():
    rows = normalize_throughput([
        {"run.strategy": "LRR", "run.operations": 10, "run.throughput": 50.0},
        {"run.strategy": "GLORAN", "run.operations": 10, "run.throughput": 100.0,
         "filters.eve_fpr": 0.01},
    ])
    table = render_table(rows)
    lines = table.splitlines()
    assert lines[0].startswith("strategy")
    assert set(lines[1].replace(" ", "")) == {"-"}
    assert "1.00x" in lines[2] and "2.00x" in lines[3]
    assert MISSING in lines[2]
    assert "0.01" in lines[3]

    print("✓ Report table renders n/a for missing metrics")


def test_report_file(tmp_path):
    path = tmp_path / "lrr.report"
    write_report(path, {
        "run.strategy": "LRR",
        "run.operations": 10,
        "run.throughput": 12.5,
        "filters.eve_fpr": None,
    })
    assert "filters.eve_fpr = n/a" in path.read_text()
    row = read_report(path)
    assert row == {
        "run.strategy": "LRR",
        "run.operations": 10,
        "run.throughput": 12.5,
        "filters.eve_fpr": None,
    }
    with pytest.raises(ConfigError):
        read_report(tmp_path / "missing.report")


def test_metrics_row_adds_model_columns():
    row = metrics_row(Metrics(strategy="GLORAN"), CostParams(N=1e5, lam=100))
    assert row["run.strategy"] == "GLORAN"
    assert row["run.throughput"] is None
    assert row["model.lookup_valid"] > 0
    assert "model.range_delete" in row
    assert not any(key.startswith("model.") for key in metrics_row(Metrics(strategy="LRR")))


def test_compare(tmp_path):
    paths = []
    for strategy, throughput in (("LRR", 80.0), ("GLORAN", 120.0)):
        path = tmp_path / f"{strategy}.report"
        write_report(path, {"run.strategy": strategy, "run.throughput": throughput})
        paths.append(path)
    table = compare(paths, baseline="GLORAN")
    assert "1.00x" in table
    assert "0.67x" in table
