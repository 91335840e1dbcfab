"""
Command-line entry point of the bench harness.

    bench generate --spec <file> --out <trace>
    bench run --trace <file> --strategy <name> [--config <file>] --out <report>
    bench model --params <file>
    bench compare --reports <files...>
    bench sweep --entries N --records Q1 Q2 ... --out <report>
    bench eve-fpr --bits 6 8 10 ... --out <report>
"""

import argparse
import math
import os
import sys
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv

from gloran.bench.cost_model import OPERATIONS, CostParams, cost_model
from gloran.bench.experiments import eve_fpr_sweep, sweep_records
from gloran.bench.report import (
    compare,
    format_value,
    metrics_row,
    normalize_throughput,
    render_table,
    write_report,
)
from gloran.bench.runner import Metrics, run
from gloran.bench.workload import PRESETS, WorkloadSpec, generate_trace
from gloran.models.config import Strategy, StoreConfig, format_flat_file
from gloran.models.operation import OpKind, iter_trace
from gloran.utils.error_handling import GloranError, is_client_error, logger

DEFAULT_DATA_DIR = "data"


def data_dir() -> Path:
    return Path(os.getenv("GLORAN_DATA_DIR", DEFAULT_DATA_DIR))


def load_config(path: Optional[str]) -> StoreConfig:
    return StoreConfig.from_file(path) if path else StoreConfig()


def derived_params(config: StoreConfig, metrics: Metrics) -> CostParams:
    """Cost parameters from a finished run: N updates, N / lam range deletes, measured rates."""
    updates = metrics.op_counts.get(OpKind.UPDATE.value, 0)
    range_deletes = metrics.op_counts.get(OpKind.RANGE_DELETE.value, 0)
    n = max(updates, config.memtable_capacity)
    lam = n / range_deletes if range_deletes else math.inf
    overrides = {"lam": lam}
    if metrics.bloom_fpr is not None:
        overrides["phi"] = metrics.bloom_fpr
    if metrics.eve_fpr is not None:
        overrides["eps"] = metrics.eve_fpr
    return CostParams.from_config(config, n, **overrides)


# Subcommands

def cmd_generate(args: argparse.Namespace) -> int:
    if args.spec:
        spec = WorkloadSpec.from_file(args.spec)
    else:
        spec = WorkloadSpec.preset(args.preset, args.range_delete_ratio)
    changes = {name: getattr(args, name) for name in ("op_count", "seed") if getattr(args, name) is not None}
    if changes:
        spec = spec.with_changes(**changes)
    count = generate_trace(spec, args.out)
    print(f"wrote {count} operations to {args.out}")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    strategy = Strategy.parse(args.strategy)
    store_dir = Path(args.store) if args.store else data_dir() / f"{Path(args.trace).stem}-{strategy.value.lower()}"
    with open(args.trace, "r", encoding="utf-8") as handle:
        metrics = run(iter_trace(handle), strategy, config, store_dir, verify=args.verify, fresh=args.fresh)

    params = CostParams.from_file(args.params) if args.params else derived_params(config, metrics)
    row = metrics_row(metrics, params)
    if args.out:
        write_report(args.out, row)
    print(render_table(normalize_throughput([row])), end="")
    for mismatch in metrics.mismatches:
        print(f"mismatch at op {mismatch.line} ({mismatch.op}): expected {mismatch.expected}, got {mismatch.actual}")
    return 1 if metrics.mismatch_count else 0


def cmd_model(args: argparse.Namespace) -> int:
    params = CostParams.from_file(args.params)
    table = cost_model(params)
    strategies = list(table)
    cells = [["operation"] + strategies]
    for op in OPERATIONS:
        cells.append([op] + [format_value(table[s][op]) for s in strategies])
    widths = [max(len(row[i]) for row in cells) for i in range(len(cells[0]))]
    for row in cells:
        print("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    print(compare(args.reports, baseline=args.baseline), end="")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    root = Path(args.store) if args.store else data_dir() / "sweep"
    result = sweep_records(
        config, root, args.entries, args.records,
        lookups=args.lookups, range_length=args.range_length, seed=args.seed,
    )
    data = {key: format_value(value) for key, value in result.to_dict().items()}
    if args.out:
        Path(args.out).write_text(format_flat_file(data), encoding="utf-8")
    for key, value in data.items():
        print(f"{key} = {value}")
    return 0


def cmd_eve_fpr(args: argparse.Namespace) -> int:
    points = eve_fpr_sweep(
        args.bits, records=args.records, probes=args.probes,
        universe=args.universe, range_length=args.range_length, seed=args.seed,
    )
    data = {}
    for p in points:
        label = f"bits{format_value(p.bits_per_record)}"
        data[f"{label}.fpr"] = format_value(p.fpr)
        data[f"{label}.expected_fpr"] = format_value(p.expected_fpr)
        data[f"{label}.false_negatives"] = p.false_negatives
        data[f"{label}.probes"] = p.probes
    if args.out:
        Path(args.out).write_text(format_flat_file(data), encoding="utf-8")
    for key, value in data.items():
        print(f"{key} = {value}")
    return 1 if any(p.false_negatives for p in points) else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bench", description="Range-delete strategy bench harness")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a workload trace")
    source = gen.add_mutually_exclusive_group(required=True)
    source.add_argument("--spec", help="workload spec file (key = value)")
    source.add_argument("--preset", choices=sorted(PRESETS))
    gen.add_argument("--range-delete-ratio", type=float, default=0.0)
    gen.add_argument("--op-count", type=int)
    gen.add_argument("--seed", type=int)
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=cmd_generate)

    runp = sub.add_parser("run", help="replay a trace under one strategy")
    runp.add_argument("--trace", required=True)
    runp.add_argument("--strategy", required=True)
    runp.add_argument("--config")
    runp.add_argument("--out")
    runp.add_argument("--store", help="store directory (default under GLORAN_DATA_DIR)")
    runp.add_argument("--params", help="cost parameters for the model column")
    runp.add_argument("--verify", action="store_true", help="check every read against the shadow oracle")
    runp.add_argument("--fresh", action="store_true", help="remove an existing store directory first")
    runp.set_defaults(func=cmd_run)

    model = sub.add_parser("model", help="evaluate the cost model")
    model.add_argument("--params", required=True)
    model.set_defaults(func=cmd_model)

    cmp = sub.add_parser("compare", help="tabulate report files")
    cmp.add_argument("--reports", nargs="+", required=True)
    cmp.add_argument("--baseline", help="strategy whose throughput is 1.00x")
    cmp.set_defaults(func=cmd_compare)

    sweep = sub.add_parser("sweep", help="sweep the number of range records")
    sweep.add_argument("--config")
    sweep.add_argument("--entries", type=int, default=1 << 17)
    sweep.add_argument("--records", type=int, nargs="+", default=[1 << i for i in range(8, 15)])
    sweep.add_argument("--lookups", type=int, default=10_000)
    sweep.add_argument("--range-length", type=int, default=128)
    sweep.add_argument("--seed", type=int, default=7)
    sweep.add_argument("--store")
    sweep.add_argument("--out")
    sweep.set_defaults(func=cmd_sweep)

    fpr = sub.add_parser("eve-fpr", help="measure the validity estimator's false positive rate")
    fpr.add_argument("--bits", type=float, nargs="+", default=[6, 8, 10, 12, 14, 16])
    fpr.add_argument("--records", type=int, default=10_000)
    fpr.add_argument("--probes", type=int, default=100_000)
    fpr.add_argument("--universe", type=int, default=1 << 20)
    fpr.add_argument("--range-length", type=int, default=128)
    fpr.add_argument("--seed", type=int, default=11)
    fpr.add_argument("--out")
    fpr.set_defaults(func=cmd_eve_fpr)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except GloranError as e:
        logger.error(f"{args.command} failed: {e.message}")
        print(f"error: {e.message}", file=sys.stderr)
        return 2 if is_client_error(e) else 1


if __name__ == "__main__":
    sys.exit(main())
