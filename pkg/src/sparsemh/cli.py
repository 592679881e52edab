"""Command-line interface: dataset analysis and the Monte Carlo study suite.

Exit codes: 0 success, 2 parse error, 3 undefined indicator / no informative
strata, 4 invalid simulation design, 5 I/O error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .estimators import UndefinedIndicatorError
from .report import build_report, render_csv, render_json, render_text
from .simulation import (
    InvalidDesignError,
    SimulationDesign,
    StudySummary,
    bias_study,
    convergence_check,
    coverage_study,
)
from .tables import NoInformativeStrataError, ParseError, parse_csv, parse_json

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_UNDEFINED = 3
EXIT_DESIGN = 4
EXIT_IO = 5

THREADS_ENV_VAR = "SPARSEMH_THREADS"


def _default_threads() -> int:
    raw = os.environ.get(THREADS_ENV_VAR, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparsemh",
        description="Mantel-Haenszel association indicators for stratified 2x2 count data",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="estimate all indicators for a CSV/JSON dataset")
    analyze.add_argument("input", help="path to a 'stratum,a,b,c,d' CSV or the equivalent JSON array")
    analyze.add_argument(
        "--input-format",
        choices=("auto", "csv", "json"),
        default="auto",
        help="input schema; 'auto' decides by file extension (default)",
    )
    analyze.add_argument(
        "--format", choices=("text", "json", "csv"), default="text", help="output format"
    )
    analyze.add_argument("--level", type=float, default=0.95, help="confidence level (default 0.95)")
    analyze.add_argument(
        "--methods",
        default="skm",
        help="comma-separated MHq variance methods: skm (default) or skm,bh",
    )
    analyze.add_argument("--out", help="write the report here instead of stdout")

    simulate = sub.add_parser("simulate", help="run one of the Monte Carlo studies")
    simulate.add_argument("study", choices=("bias", "coverage", "width", "convergence"))
    simulate.add_argument("--k", type=int, default=30, help="number of strata")
    simulate.add_argument("--n-mentioned", type=int, default=100, help="mentioned articles per stratum")
    simulate.add_argument(
        "--n-not-mentioned", type=int, default=1000, help="not-mentioned articles per stratum"
    )
    simulate.add_argument("--psi", type=float, default=1.0, help="true column risk ratio")
    simulate.add_argument("--p1-low", type=float, default=0.01, help="lower bound of the p1 draw")
    simulate.add_argument("--p1-high", type=float, default=0.2, help="upper bound of the p1 draw")
    simulate.add_argument("--datasets", type=int, default=10_000, help="datasets per repetition")
    simulate.add_argument("--reps", type=int, default=20, help="repetitions (fresh p1 draw each)")
    simulate.add_argument("--seed", type=int, default=42, help="master seed")
    simulate.add_argument(
        "--threads",
        type=int,
        default=None,
        help=f"worker processes (default: ${THREADS_ENV_VAR} or 1); never changes the numbers",
    )
    simulate.add_argument(
        "--scales",
        default="1,10,100",
        help="convergence only: comma-separated sample-size multipliers",
    )
    simulate.add_argument(
        "--replicates", type=int, default=1000, help="convergence only: datasets per scale"
    )
    simulate.add_argument("--out", help="output prefix for <prefix>.csv and <prefix>.json")

    sub.add_parser("version", help="print the package version")
    return parser


def _read_dataset(path_text: str, input_format: str):
    path = Path(path_text)
    data = path.read_bytes()
    if input_format == "auto":
        input_format = "json" if path.suffix.lower() == ".json" else "csv"
    return parse_json(data) if input_format == "json" else parse_csv(data)


def _cmd_analyze(args: argparse.Namespace) -> int:
    ds = _read_dataset(args.input, args.input_format)
    methods = tuple(m.strip().lower() for m in args.methods.split(",") if m.strip())
    report = build_report(ds, source=args.input, level=args.level, methods=methods)
    rendered = {"text": render_text, "json": render_json, "csv": render_csv}[args.format](report)
    if args.out:
        Path(args.out).write_text(rendered, encoding="utf-8")
    else:
        sys.stdout.write(rendered)
    return EXIT_OK


def _digest(summary: StudySummary) -> str:
    records = summary.records
    if summary.study == "bias":
        skm = sum(r.skm_bias for r in records) / len(records)
        bh = sum(r.bh_bias for r in records) / len(records)
        return (
            f"bias: psi={summary.design.psi} reps={len(records)} "
            f"mean_skm_bias={skm:+.5f} mean_bh_bias={bh:+.5f}"
        )
    if summary.study in ("coverage", "width"):
        skm_cov = sum(r.skm_coverage for r in records) / len(records)
        bh_cov = sum(r.bh_coverage for r in records) / len(records)
        skm_w = sum(r.skm_mean_width for r in records) / len(records)
        bh_w = sum(r.bh_mean_width for r in records) / len(records)
        ratio = bh_w / skm_w if skm_w else float("nan")
        if summary.study == "width":
            return (
                f"width: psi={summary.design.psi} reps={len(records)} "
                f"skm_mean_width={skm_w:.4f} bh_mean_width={bh_w:.4f} bh/skm={ratio:.4f}"
            )
        return (
            f"coverage: psi={summary.design.psi} reps={len(records)} "
            f"skm={skm_cov:.4f} bh={bh_cov:.4f} dropped={summary.dropped_total}"
        )
    last = records[-1]
    return (
        f"convergence: psi={summary.design.psi} scale={last.scale} "
        f"mean_abs_dev={last.mean_abs_dev:.5f} (mc_se {last.mc_se:.5f})"
    )


def _cmd_simulate(args: argparse.Namespace) -> int:
    design = SimulationDesign(
        k=args.k,
        n_mentioned=args.n_mentioned,
        n_not_mentioned=args.n_not_mentioned,
        psi=args.psi,
        p1_low=args.p1_low,
        p1_high=args.p1_high,
        datasets_per_rep=args.datasets,
        reps=args.reps,
        seed=args.seed,
    )
    threads = args.threads if args.threads is not None else _default_threads()
    if threads < 1:
        raise InvalidDesignError(f"--threads must be at least 1, got {threads}")

    if args.study == "bias":
        summary = bias_study(design, threads=threads)
    elif args.study in ("coverage", "width"):
        summary = coverage_study(design, threads=threads, study=args.study)
    else:
        try:
            scales = [int(s) for s in args.scales.split(",") if s.strip()]
        except ValueError:
            raise InvalidDesignError(f"--scales must be comma-separated integers, got {args.scales!r}") from None
        rng = np.random.default_rng(np.random.SeedSequence((design.seed,)))
        p1s = rng.uniform(design.p1_low, design.p1_high, size=design.k)
        records = convergence_check(
            design.psi,
            p1s,
            design.n_mentioned,
            design.n_not_mentioned,
            scales,
            rng,
            replicates=args.replicates,
        )
        summary = StudySummary(
            study="convergence",
            design=design,
            records=records,
            dropped_total=sum(args.replicates - r.replicates for r in records),
        )

    prefix = Path(args.out) if args.out else Path(f"sparsemh_{args.study}")
    csv_path, json_path = summary.write(prefix)
    print(f"{_digest(summary)} -> {csv_path} {json_path}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "analyze":
            return _cmd_analyze(args)
        if args.command == "simulate":
            return _cmd_simulate(args)
        print(f"sparsemh {__version__}")
        return EXIT_OK
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (UndefinedIndicatorError, NoInformativeStrataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNDEFINED
    except InvalidDesignError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DESIGN
    except ValueError as exc:
        # invalid flag values (--level, --methods, ...) outside their domain
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DESIGN
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    raise SystemExit(main())
