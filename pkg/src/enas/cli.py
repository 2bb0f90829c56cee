"""Command-line entry points: run experiments, audit outputs, export plot data."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .data import DatasetError
from .evolution import ConfigurationError
from .experiment import (
    AuditError,
    ExperimentError,
    audit_output_dir,
    config_from_file,
    emit_plot_data,
    read_history_csv,
    run_experiment,
)
from .synthetic import make_threshold_dataset, write_dataset_csv


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="enas",
        description="Neuroevolution of feed-forward binary classifiers with "
        "self-adapting evolutionary parameters.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute the experiment described by a JSON config")
    run_p.add_argument("--config", required=True, help="path to the experiment config JSON")
    run_p.add_argument(
        "--dataset",
        action="append",
        default=None,
        help="restrict to this dataset name from the config (repeatable)",
    )
    run_p.add_argument(
        "--mode",
        choices=["nas_plus", "enas", "both"],
        default=None,
        help="override the configured mode list",
    )
    run_p.add_argument("--runs", type=int, default=None, help="repeated runs per cell")
    run_p.add_argument("--seed", type=int, default=None, help="base seed override")
    run_p.add_argument("--out", default=None, help="output directory override")
    run_p.add_argument(
        "--pop-bounds",
        nargs=2,
        type=int,
        metavar=("LO", "HI"),
        default=None,
        help="population size bounds for the adaptive search",
    )
    run_p.add_argument(
        "--max-generations-cap",
        type=int,
        default=None,
        help="upper bound on generations for both modes",
    )
    run_p.add_argument("--jobs", type=int, default=None, help="parallel evaluator processes")

    audit_p = sub.add_parser(
        "audit", help="recompute summary.csv from the history files and compare"
    )
    audit_p.add_argument("--out", required=True, help="experiment output directory")

    plot_p = sub.add_parser("plot-data", help="extract plot columns from a history CSV")
    plot_p.add_argument("history", help="path to a history_*.csv file")
    plot_p.add_argument("output", help="where to write the plot-ready CSV")

    demo_p = sub.add_parser("demo-data", help="generate small synthetic datasets to try the tool")
    demo_p.add_argument("--out", default="data", help="directory for the generated CSV files")
    demo_p.add_argument("--seed", type=int, default=7, help="generation seed")
    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    overrides = {
        "datasets": args.dataset,
        "modes": None if args.mode in (None, "both") else [args.mode],
        "runs": args.runs,
        "seed": args.seed,
        "out": args.out,
        "pop_bounds": tuple(args.pop_bounds) if args.pop_bounds else None,
        "max_generations_cap": args.max_generations_cap,
        "jobs": args.jobs,
    }
    if args.mode == "both":
        overrides["modes"] = ["nas_plus", "enas"]
    config = config_from_file(args.config, overrides)
    result = run_experiment(config)
    print(f"artifacts written to {result.out_dir}")
    return 0


def _cmd_audit(args: argparse.Namespace) -> int:
    audit_output_dir(args.out)
    print(f"audit passed: summary.csv matches the history files under {args.out}")
    return 0


def _cmd_plot_data(args: argparse.Namespace) -> int:
    emit_plot_data(read_history_csv(args.history), args.output)
    print(f"wrote {args.output}")
    return 0


# (name, instances, attributes, separation margin)
_DEMO_DATASETS = (
    ("demo_easy", 120, 4, 0.12),
    ("demo_wide", 140, 10, 0.08),
    ("demo_narrow", 160, 6, 0.03),
    ("demo_small", 60, 3, 0.10),
)


def _cmd_demo_data(args: argparse.Namespace) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i, (name, instances, attributes, margin) in enumerate(_DEMO_DATASETS):
        dataset = make_threshold_dataset(
            instances=instances,
            attributes=attributes,
            seed=args.seed + i,
            name=name,
            margin=margin,
        )
        path = write_dataset_csv(dataset, out / f"{name}.csv")
        print(f"wrote {path}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "audit": _cmd_audit,
        "plot-data": _cmd_plot_data,
        "demo-data": _cmd_demo_data,
    }
    try:
        return handlers[args.command](args)
    except AuditError as exc:
        print(f"audit failed: {exc}", file=sys.stderr)
        return 1
    except (ExperimentError, ConfigurationError, DatasetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
