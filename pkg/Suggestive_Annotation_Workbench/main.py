#!/usr/bin/env python3
"""
Suggestive Annotation Workbench: command line
==============================================

Run:  python main.py <subcommand> [flags]     (python main.py -h for the list)

Subcommands:
  phantom    generate a phantom benchmark (VTF1 cases + manifest.json)
  dice       hard Dice of a predicted label map against ground truth
  bvsb       Average BvSB score of probability maps, most uncertain first
  effort     saved annotation effort of a prediction against ground truth
  simulate   run the active-learning simulation (one strategy or a comparison)
  convert    PGM -> VTF1, or VTF1 -> PGM
  benchmark  paired-seed BvSB vs random experiment on generated phantoms

Results go to standard output as CSV; diagnostics go to standard error.
Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime failure.
"""

import argparse
import logging
import sys
from pathlib import Path

from active_loop import LOG_FILE_NAME, compare_strategies, run_simulation
from benchmark import BENCHMARK_INTENSITY_SHIFT, DEFAULT_SPLIT, DEFAULT_TARGET, run_paired_benchmark
from boundary_effort import effort_report
from errors import WorkbenchError
from log_tables import (
    candidate_scores_frame,
    dice_curve_frame,
    effort_summary,
    iterations_frame,
    strategy_summary,
    to_csv,
)
from metrics import DICE_CSV_HEADER, average_bvsb, dice_report
from phantom import (
    DEFAULT_INTENSITY_SHIFT,
    DEFAULT_NOISE_SIGMA,
    DEFAULT_SIZE,
    MANIFEST_NAME,
    PhantomSpec,
    generate_benchmark,
)
from report_pdf import write_pdf
from sim_config import load_simulation_configs
from tensor_io import (
    LabelMap,
    ProbMap,
    atomic_write_text,
    load_manifest,
    load_tensor,
    read_pgm,
    save_tensor,
    write_pgm,
)

logger = logging.getLogger("workbench")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 3


class UsageError(Exception):
    pass


class WorkbenchArgumentParser(argparse.ArgumentParser):
    """argparse exits 2 on bad usage; the workbench reserves 2 for data errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _size(text: str) -> tuple[int, int]:
    try:
        rows, cols = (int(part) for part in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected RxC, got {text!r}") from None
    return rows, cols


def _non_negative(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


# ─────────────────────────────────────────────────────────────────────
# Subcommands
# ─────────────────────────────────────────────────────────────────────

def cmd_phantom(args) -> int:
    spec = PhantomSpec(size=args.size, seed=args.seed, noise_sigma=args.noise, intensity_shift=args.shift)
    out_dir = Path(args.out)
    generate_benchmark(spec, args.labeled, args.pool, args.test, out_dir)
    print(out_dir / MANIFEST_NAME)
    return EXIT_OK


def cmd_dice(args) -> int:
    report = dice_report(load_tensor(args.pred, expect=LabelMap), load_tensor(args.gt, expect=LabelMap))
    print(DICE_CSV_HEADER)
    print(report.to_csv_row())
    return EXIT_OK


def cmd_bvsb(args) -> int:
    scored = [(path, average_bvsb(load_tensor(path, expect=ProbMap))) for path in args.probmap]
    # stable: equal scores keep input order
    for path, score in sorted(scored, key=lambda item: item[1]):
        print(f"{path},{score!r}")
    return EXIT_OK


def cmd_effort(args) -> int:
    report = effort_report(load_tensor(args.gt, expect=LabelMap), load_tensor(args.pred, expect=LabelMap), args.tol)
    sys.stdout.write(report.to_csv())
    return EXIT_OK


def _write_run(log, out_dir: Path, pdf: bool) -> None:
    atomic_write_text(out_dir / LOG_FILE_NAME, log.to_json())
    atomic_write_text(out_dir / "dice_curve.csv", to_csv(dice_curve_frame(log)))
    atomic_write_text(out_dir / "iterations.csv", to_csv(iterations_frame(log)))
    atomic_write_text(out_dir / "candidate_scores.csv", to_csv(candidate_scores_frame(log)))
    atomic_write_text(out_dir / "effort_summary.csv", to_csv(effort_summary(log)))
    if pdf:
        write_pdf(log, out_dir / "run_record.pdf")


def cmd_simulate(args) -> int:
    manifest = load_manifest(args.manifest)
    configs = load_simulation_configs(args.config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    if len(configs) == 1:
        log = run_simulation(manifest, configs[0], out_dir)
        _write_run(log, out_dir, args.pdf)
        sys.stdout.write(to_csv(dice_curve_frame(log)))
        return EXIT_OK

    run_dirs = [out_dir / name for name in ("bvsb", "random")]
    for run_dir in run_dirs:
        run_dir.mkdir(exist_ok=True)
    comparison = compare_strategies(manifest, configs, run_dirs)
    for log, run_dir in zip(comparison.logs, run_dirs):
        _write_run(log, run_dir, args.pdf)
    target = configs[0].target_mean_dice or DEFAULT_TARGET
    atomic_write_text(out_dir / "comparison.csv", comparison.to_csv())
    atomic_write_text(out_dir / "strategy_summary.csv", to_csv(strategy_summary(comparison.logs, target)))
    sys.stdout.write(comparison.to_csv())
    return EXIT_OK


def cmd_convert(args) -> int:
    if args.pgm:
        if args.kind is None:
            raise UsageError("--pgm needs --kind volume|labelmap")
        save_tensor(read_pgm(args.pgm, args.kind), args.out)
    else:
        write_pgm(load_tensor(args.vtf), args.out)
    print(args.out)
    return EXIT_OK


def cmd_benchmark(args) -> int:
    seeds = list(range(args.first_seed, args.first_seed + args.seeds))
    spec = PhantomSpec(size=args.size, noise_sigma=args.noise, intensity_shift=args.shift)
    summary = run_paired_benchmark(
        seeds, args.out, spec, (args.labeled, args.pool, args.test), args.target
    )
    sys.stdout.write(to_csv(summary.to_frame()))
    return EXIT_OK


# ─────────────────────────────────────────────────────────────────────
# Parser
# ─────────────────────────────────────────────────────────────────────

def build_parser() -> argparse.ArgumentParser:
    parser = WorkbenchArgumentParser(prog="workbench", description="Suggestive annotation workbench")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phantom", help="generate a phantom benchmark")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=_non_negative, required=True)
    p.add_argument("--labeled", type=_non_negative, required=True)
    p.add_argument("--pool", type=_non_negative, required=True)
    p.add_argument("--test", type=_non_negative, required=True)
    p.add_argument("--size", type=_size, default=DEFAULT_SIZE, help="RxC, default 32x32")
    p.add_argument("--noise", type=float, default=DEFAULT_NOISE_SIGMA)
    p.add_argument("--shift", type=float, default=DEFAULT_INTENSITY_SHIFT, help="per-case intensity offset range; seed cases use +shift")
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("dice", help="hard Dice report as CSV")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.set_defaults(func=cmd_dice)

    p = sub.add_parser("bvsb", help="Average BvSB per probability map")
    p.add_argument("--probmap", action="append", required=True, help="repeatable")
    p.set_defaults(func=cmd_bvsb)

    p = sub.add_parser("effort", help="saved effort report as CSV")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--tol", type=_non_negative, default=0, help="Chebyshev tolerance in pixels")
    p.set_defaults(func=cmd_effort)

    p = sub.add_parser("simulate", help="run the active-learning simulation")
    p.add_argument("--manifest", required=True)
    p.add_argument("--config", required=True, help="simulation config JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--pdf", action="store_true", help="also write a PDF run record")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("convert", help="PGM <-> VTF1 conversion")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--pgm", help="binary P5 input, written as VTF1")
    source.add_argument("--vtf", help="2D u8 VTF1 input, written as PGM")
    p.add_argument("--out", required=True)
    p.add_argument("--kind", choices=("volume", "labelmap"))
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("benchmark", help="paired-seed BvSB vs random experiment")
    p.add_argument("--out", required=True, help="work directory for generated benchmarks")
    p.add_argument("--seeds", type=_positive, default=10)
    p.add_argument("--first-seed", type=_non_negative, default=0)
    p.add_argument("--target", type=float, default=DEFAULT_TARGET)
    p.add_argument("--labeled", type=_positive, default=DEFAULT_SPLIT[0])
    p.add_argument("--pool", type=_positive, default=DEFAULT_SPLIT[1])
    p.add_argument("--test", type=_positive, default=DEFAULT_SPLIT[2])
    p.add_argument("--size", type=_size, default=DEFAULT_SIZE)
    p.add_argument("--noise", type=float, default=DEFAULT_NOISE_SIGMA)
    p.add_argument("--shift", type=float, default=BENCHMARK_INTENSITY_SHIFT)
    p.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")

    try:
        return args.func(args)
    except UsageError as exc:
        print(f"workbench: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except WorkbenchError as exc:
        logger.debug("failure detail", exc_info=True)
        print(f"workbench: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"workbench: {exc}", file=sys.stderr)
        return 2
    except Exception:
        logger.exception("unexpected failure")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
