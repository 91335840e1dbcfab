"""
Tests for the bench command line.
"""

import pytest

from gloran.bench.cli import main
from gloran.bench.report import read_report, write_report
from gloran.models.operation import read_trace

WORKLOAD = """\
op_count = 300
update = 0.5
point_lookup = 0.3
range_delete = 0.1
range_lookup = 0.1
universe = 4096
range_delete_length = 16
range_lookup_length = 16
seed = 5
"""


@pytest.fixture
def bench_env(tmp_path, monkeypatch, small_config):
    """Workload spec, store config and a data directory under tmp_path."""
    monkeypatch.setenv("GLORAN_DATA_DIR", str(tmp_path / "data"))
    spec = tmp_path / "workload.txt"
    spec.write_text(WORKLOAD)
    config = tmp_path / "store.txt"
    small_config.to_file(config)
    return tmp_path, spec, config


def test_generate_from_preset(tmp_path):
    out = tmp_path / "t.trace"
    code = main(["generate", "--preset", "balanced", "--range-delete-ratio", "0.1",
                 "--op-count", "300", "--seed", "5", "--out", str(out)])
    assert code == 0
    assert len(read_trace(out)) == 300


def test_generate_and_run(bench_env, capsys):
    """A generated trace replays under GLORAN with every read verified."""
    root, spec, config = bench_env
    trace = root / "mixed.trace"
    report = root / "gloran.report"
    assert main(["generate", "--spec", str(spec), "--out", str(trace)]) == 0

    code = main(["run", "--trace", str(trace), "--strategy", "gloran", "--config", str(config),
                 "--out", str(report), "--verify"])
    assert code == 0
    row = read_report(report)
    assert row["run.strategy"] == "GLORAN"
    assert row["run.operations"] == 300
    assert row["verify.mismatches"] == 0
    assert "model.lookup_valid" in row
    assert (root / "data" / "mixed-gloran").is_dir()

    output = capsys.readouterr().out
    assert "GLORAN" in output
    assert "1.00x" in output

    print("✓ bench run verified the trace")


def test_run_refuses_existing_store(bench_env):
    root, spec, config = bench_env
    trace = root / "mixed.trace"
    main(["generate", "--spec", str(spec), "--out", str(trace)])
    args = ["run", "--trace", str(trace), "--strategy", "LRR", "--config", str(config)]
    assert main(args) == 0
    assert main(args) == 2
    assert main(args + ["--fresh"]) == 0


def test_model(tmp_path, capsys):
    params = tmp_path / "params.txt"
    params.write_text("N = 100000\nlam = 100\n")
    assert main(["model", "--params", str(params)]) == 0
    output = capsys.readouterr().out
    assert "lookup_valid" in output
    assert "GLORAN" in output and "LRR" in output


def test_model_missing_params(tmp_path, capsys):
    assert main(["model", "--params", str(tmp_path / "missing.txt")]) == 2
    assert "error:" in capsys.readouterr().err


def test_compare(tmp_path, capsys):
    reports = []
    for strategy, throughput in (("GLORAN", 300.0), ("LRR", 150.0)):
        path = tmp_path / f"{strategy}.report"
        write_report(path, {"run.strategy": strategy, "run.throughput": throughput})
        reports.append(str(path))
    assert main(["compare", "--reports", *reports, "--baseline", "LRR"]) == 0
    output = capsys.readouterr().out
    assert "2.00x" in output and "1.00x" in output


def test_eve_fpr(tmp_path):
    out = tmp_path / "fpr.txt"
    code = main(["eve-fpr", "--bits", "8", "--records", "200", "--probes", "1000",
                 "--universe", "65536", "--range-length", "32", "--out", str(out)])
    assert code == 0
    text = out.read_text()
    assert "bits8.fpr" in text
    assert "bits8.false_negatives = 0" in text
