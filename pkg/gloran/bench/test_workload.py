"""
Tests for workload generation: determinism, operation mixes, presets and
the zipfian key distribution.
"""

from collections import Counter

import numpy as np
import pytest

from gloran.bench.workload import (
    WorkloadSpec,
    ZipfianGenerator,
    generate_list,
    generate_trace,
    zeta,
)
from gloran.models.operation import OpKind, read_trace
from gloran.utils.error_handling import ConfigError


def test_same_seed_same_trace():
    """A seed fixes the trace operation for operation."""
    spec = WorkloadSpec(op_count=500, update=0.4, point_lookup=0.3, range_delete=0.2,
                        range_lookup=0.1, universe=1 << 12, seed=9)
    assert generate_list(spec) == generate_list(spec)
    assert generate_list(spec) != generate_list(spec.with_changes(seed=10))


def test_update_only_mix():
    spec = WorkloadSpec(op_count=200, update=1.0, point_lookup=0.0, universe=1 << 10, value_length=5)
    ops = generate_list(spec)
    assert len(ops) == 200
    assert all(op.kind == OpKind.UPDATE for op in ops)
    assert all(0 <= op.key < 1 << 10 and len(op.value) == 5 for op in ops)


def test_preload_comes_first():
    spec = WorkloadSpec(op_count=10, preload=30, update=0.0, point_lookup=1.0, universe=1 << 10)
    ops = generate_list(spec)
    assert len(ops) == 40
    assert all(op.kind == OpKind.UPDATE for op in ops[:30])
    assert all(op.kind == OpKind.GET for op in ops[30:])


def test_range_delete_share_and_bounds():
    """About a tenth of a balanced trace are range deletes, all inside the universe."""
    spec = WorkloadSpec.preset("balanced", 0.1, op_count=10_000, universe=1 << 12,
                               range_delete_length=64, seed=3)
    ops = generate_list(spec)
    ranges = [op for op in ops if op.kind == OpKind.RANGE_DELETE]
    # five standard deviations of Binomial(10000, 0.1)
    assert abs(len(ranges) - 1000) <= 150
    assert all(op.hi - op.lo == 64 and op.hi <= 1 << 12 for op in ranges)


def test_presets():
    spec = WorkloadSpec.preset("lookup_heavy", 0.05)
    assert spec.update == pytest.approx(0.05)
    assert spec.range_delete == 0.05
    assert spec.point_lookup == 0.9

    with pytest.raises(ConfigError):
        WorkloadSpec.preset("lookup_heavy", 0.2)
    with pytest.raises(ConfigError):
        WorkloadSpec.preset("write_only")


@pytest.mark.parametrize("changes", [
    {"update": 0.7},
    {"update": -0.5, "point_lookup": 1.5},
    {"distribution": "pareto"},
    {"range_delete_length": 0},
    {"universe": 64, "range_delete_length": 128},
    {"distribution": "zipfian", "theta": 1.0},
    {"op_count": -1},
])
def test_invalid_specs(changes):
    with pytest.raises(ConfigError):
        WorkloadSpec(**changes)


def test_from_dict_with_preset():
    spec = WorkloadSpec.from_dict({
        "preset": "update_heavy",
        "range_delete_ratio": "0.2",
        "op_count": "50",
        "distribution": "Zipfian",
    })
    assert spec.update == pytest.approx(0.7)
    assert spec.range_delete == 0.2
    assert spec.op_count == 50
    assert spec.distribution == "zipfian"

    with pytest.raises(ConfigError):
        WorkloadSpec.from_dict({"op_count": "many"})
    with pytest.raises(ConfigError):
        WorkloadSpec.from_dict({"readers": "4"})


def test_spec_file(tmp_path):
    path = tmp_path / "w.txt"
    spec = WorkloadSpec(op_count=20, universe=1 << 10)
    path.write_text(spec.to_text())
    assert WorkloadSpec.from_file(path) == spec
    with pytest.raises(ConfigError):
        WorkloadSpec.from_file(tmp_path / "missing.txt")


def test_generate_trace_file(tmp_path):
    spec = WorkloadSpec(op_count=100, update=0.5, point_lookup=0.2, range_delete=0.2,
                        range_lookup=0.1, universe=1 << 10, range_delete_length=8,
                        range_lookup_length=8)
    path = tmp_path / "t.trace"
    assert generate_trace(spec, path) == 100
    assert read_trace(path) == generate_list(spec)


def test_zeta():
    assert zeta(1, 0.5) == pytest.approx(1.0)
    assert zeta(2, 0.5) == pytest.approx(1 + 2 ** -0.5)


def test_zipfian_is_skewed():
    """The most popular item takes a large share; every key stays in range."""
    generator = ZipfianGenerator(1000, 0.99, scramble_seed=4)
    assert list(generator.ranks(np.array([0.0]))) == [0]

    keys = generator.sample(np.random.default_rng(1), 20_000)
    assert keys.min() >= 0 and keys.max() < 1000
    _, top = Counter(keys.tolist()).most_common(1)[0]
    assert top / 20_000 > 0.05

    print("✓ Zipfian keys are skewed")


def test_zipfian_trace():
    spec = WorkloadSpec(op_count=300, distribution="zipfian", universe=1 << 12, seed=2)
    keys = [op.key for op in generate_list(spec)]
    assert all(0 <= k < 1 << 12 for k in keys)
    assert len(set(keys)) < len(keys)
