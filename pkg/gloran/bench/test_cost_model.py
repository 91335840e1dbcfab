"""
Tests for the analytical cost model.
"""

import math

import numpy as np
import pytest

from gloran.bench.cost_model import (
    OPERATIONS,
    CostParams,
    cost_model,
    fit_coefficient,
    index_area_bytes,
    index_check_cost,
    index_insert_cost,
    node_bound,
    predict,
)
from gloran.bench.runner import run
from gloran.models.config import Strategy, StoreConfig
from gloran.models.operation import Operation
from gloran.utils.error_handling import ConfigError


def test_table_covers_every_strategy_and_operation():
    table = cost_model(CostParams(N=1e6, lam=100))
    assert set(table) == {s.value for s in Strategy}
    for costs in table.values():
        assert set(costs) == set(OPERATIONS)
        assert all(value >= 0 for value in costs.values())


def test_derived_quantities():
    p = CostParams(N=1e6, lam=100, F=4096, T=10, F_index=256, T_index=10)
    assert p.levels == pytest.approx(math.log10(1e6 / 4096))
    assert p.records == pytest.approx(1e4)
    assert p.index_levels == 2
    assert p.index_level_records() == [2560, 25600]
    expected = (math.log(2560, 10) + 1) + (math.log(25600, 10) + 1)
    assert index_check_cost(p) == pytest.approx(expected)


def test_without_range_deletes():
    """With no range records the index and tombstone scans cost nothing."""
    p = CostParams(N=1e6)
    assert p.records == 0
    assert p.index_levels == 0
    gloran = predict(p, Strategy.GLORAN)
    assert gloran["lookup_obsolete"].terms["index"] == 0
    assert gloran["lookup_valid"].total == math.ceil(p.phi * p.levels)

    lrr = predict(p, Strategy.LRR)["lookup_nonexistent"]
    assert lrr.terms["tombstone_scan"] == 0
    assert lrr.total == pytest.approx(p.levels + p.phi * p.levels)


def test_lrr_grows_faster_than_gloran():
    """A hundredfold increase in range records costs LRR far more than GLORAN."""
    few = cost_model(CostParams(N=1e7, lam=10_000))
    many = cost_model(CostParams(N=1e7, lam=100))
    lrr_growth = many["LRR"]["lookup_valid"] - few["LRR"]["lookup_valid"]
    gloran_growth = many["GLORAN"]["lookup_obsolete"] - few["GLORAN"]["lookup_obsolete"]
    assert lrr_growth > 10 * gloran_growth > 0


def test_point_methods():
    p = CostParams(N=1e6, range_length=64)
    decomp = predict(p, Strategy.DECOMP)
    assert set(decomp["range_delete"].terms) == {"tombstones"}
    assert decomp["lookup_obsolete"].total == decomp["lookup_valid"].total
    assert "lookups" in predict(p, Strategy.LOOKUP_DELETE)["range_delete"].terms
    assert "scan" in predict(p, Strategy.SCAN_DELETE)["range_delete"].terms
    assert (predict(p, Strategy.SCAN_DELETE)["range_delete"].total
            > decomp["range_delete"].total)


def test_node_bound():
    assert node_bound(1000, 10) <= 2223
    assert node_bound(1, 2) == 4


def test_coefficients_scale_predictions():
    plain = CostParams.from_dict({"N": "1e6", "lam": "100"})
    scaled = CostParams.from_dict({"N": "1e6", "lam": "100", "coef.GLORAN.lookup_valid": "2"})
    base = predict(plain, Strategy.GLORAN)["lookup_valid"].total
    assert predict(scaled, Strategy.GLORAN)["lookup_valid"].total == pytest.approx(2 * base)
    assert predict(scaled, Strategy.LRR)["lookup_valid"].total == predict(plain, Strategy.LRR)["lookup_valid"].total


@pytest.mark.parametrize("data", [
    {"lam": "100"},
    {"N": "1e6", "fanout": "4"},
    {"N": "lots"},
    {"N": "1e6", "phi": "1.5"},
    {"N": "1e6", "T": "1"},
    {"N": "0"},
])
def test_invalid_parameters(data):
    with pytest.raises(ConfigError):
        CostParams.from_dict(data)


def test_params_file(tmp_path):
    path = tmp_path / "params.txt"
    path.write_text("# model inputs\nN = 100000\nlam = 50\neps = 0\n")
    p = CostParams.from_file(path)
    assert p.N == 100_000 and p.lam == 50 and p.eps == 0
    with pytest.raises(ConfigError):
        CostParams.from_file(tmp_path / "missing.txt")


def test_from_config():
    p = CostParams.from_config(StoreConfig(), N=1e6, lam=1000)
    assert p.F == 4096
    assert p.F_index == 256
    assert p.phi == pytest.approx(0.6185 ** 10)
    assert p.lam == 1000


def test_fit_coefficient():
    assert fit_coefficient([2, 4, 6], [1, 2, 3]) == pytest.approx(2.0)
    assert fit_coefficient([1, 2], [0, 0]) == 1.0


def test_index_area_bytes():
    """Ten 408-byte nodes per 4 KiB block, about one node per nine areas."""
    p = CostParams(N=1e6, B=4096, k=8, D=10)
    assert index_area_bytes(p) == pytest.approx(409.6 / 9)


def test_index_insert_terms():
    p = CostParams(N=409_600, lam=100, F_index=64, T_index=10)
    terms = predict(p, Strategy.GLORAN)["range_delete"].terms
    assert set(terms) == {"index_compaction", "index_build_overhead"}
    assert terms["index_compaction"] == pytest.approx(409.6 / 9 / 4096 * 5.5 * math.log10(64))
    assert terms["index_build_overhead"] == pytest.approx(1.5 * 10 / 9 / 64)
    assert index_insert_cost(p) == pytest.approx(sum(terms.values()))

    fewer = CostParams(N=409_600, lam=10_000, F_index=64, T_index=10)
    assert predict(fewer, Strategy.GLORAN)["range_delete"].terms["index_compaction"] == 0


def test_range_delete_writes_match_model(tmp_path):
    """Measured index block writes per range delete stay within 2x of the model."""
    config = StoreConfig(memtable_capacity=1024)
    records = 4096
    rng = np.random.default_rng(11)
    starts = rng.integers(0, config.universe - 16, size=records)
    trace = [Operation.range_delete(int(lo), int(lo) + 16) for lo in starts]

    metrics = run(trace, "GLORAN", config, tmp_path / "g")
    measured = metrics.index_writes_per_range_delete
    predicted = index_insert_cost(CostParams.from_config(config, N=records * 100, lam=100))

    assert config.index_buffer_capacity == 64
    assert metrics.data_writes_per_range_delete == 0
    assert predicted / 2 <= measured <= 2 * predicted
