"""``qspectral`` command-line entry point.

Subcommands::

    qspectral generate --out DIR          write the configured dataset as CSV
    qspectral cluster  --out DIR          one run: result.json, points.csv, embedding.csv, edges.txt
    qspectral sweep    --out DIR          sweep over n: sweep.csv, summary.json, cost_curves.csv
    qspectral report   SWEEP_CSV --out DIR  re-aggregate an existing sweep.csv

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from qspectral import datasets, pipeline
from qspectral.config import ConfigError, RunConfig, load_config, parse_overrides

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

log = logging.getLogger("qspectral")


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="config file with section.key = value lines")
    common.add_argument("--mode", choices=("classical", "quantum"), help="override noise.mode")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key (repeatable)")
    common.add_argument("--out", help="output directory (default: run.output_dir, $QSPECTRAL_OUTPUT_DIR or ./results)")
    common.add_argument("--seed", type=int, help="override noise.seed")
    common.add_argument("--workers", type=int, help="override run.workers")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="qspectral", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("generate", parents=[common], help="write the dataset as CSV")
    sub.add_parser("cluster", parents=[common], help="run the pipeline once")
    sub.add_parser("sweep", parents=[common], help="run the sweep over n")
    rep = sub.add_parser("report", parents=[common], help="summarize an existing sweep.csv")
    rep.add_argument("sweep_csv", help="path to a sweep.csv written by the sweep command")
    return parser


def resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    overrides = parse_overrides(args.set)
    if args.mode:
        overrides["noise.mode"] = args.mode
    if args.seed is not None:
        overrides["noise.seed"] = str(args.seed)
    if args.workers is not None:
        overrides["run.workers"] = str(args.workers)
    if overrides:
        cfg = cfg.with_overrides(overrides)
    if args.out:
        cfg = replace(cfg, run=replace(cfg.run, output_dir=args.out))
    return cfg


def _generate(cfg: RunConfig, outdir: Path) -> list:
    cfg.validate()
    S = pipeline.load_dataset(cfg, cfg.noise.seed)
    return [datasets.save_csv(S, outdir / "dataset.csv", S.ground_truth)]


def _cluster(cfg: RunConfig, outdir: Path) -> list:
    result = pipeline.run_pipeline(cfg)
    rec = result.record
    acc = rec["accuracy"]
    msg = f"n={rec['n']} mode={rec['mode']} edges={rec['edges']} iterations={rec['clustering']['iterations']}"
    if acc is not None:
        msg += f" accuracy={acc:.4f} misclassified={rec['misclassified']}"
    print(msg)
    return pipeline.export_plotdata(result, outdir)


def _sweep(cfg: RunConfig, outdir: Path) -> list:
    sweep = pipeline.run_sweep(cfg)
    _print_summary(sweep.summary)
    return pipeline.export_plotdata(sweep, outdir)


def _report(args, cfg: RunConfig, outdir: Path) -> list:
    path = Path(args.sweep_csv)
    if not path.is_file():
        raise ConfigError(f"sweep file {path} does not exist")
    rows = pipeline.read_sweep_csv(path)
    sweep = pipeline.SweepResult(rows, pipeline.summarize(rows))
    _print_summary(sweep.summary)
    return pipeline.export_plotdata(sweep, outdir)


def _print_summary(summary: dict) -> None:
    print(f"{'n':>6} {'runs':>5} {'accuracy':>18}")
    for row in summary["per_n"]:
        if row["accuracy_mean"] is None:
            acc = "n/a"
        else:
            acc = f"{100 * row['accuracy_mean']:.2f}% +- {100 * row['accuracy_sd']:.2f}%"
        print(f"{row['n']:>6} {row['runs']:>5} {acc:>18}")
    print(f"classical slope {summary['classical_slope']:.3f}  quantum slope {summary['quantum_slope']:.3f}"
          f"  crossover n {summary['crossover_n']:.4g}")


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        outdir = cfg.output_dir()
        if args.command == "generate":
            paths = _generate(cfg, outdir)
        elif args.command == "cluster":
            paths = _cluster(cfg, outdir)
        elif args.command == "sweep":
            paths = _sweep(cfg, outdir)
        else:
            paths = _report(args, cfg, outdir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (pipeline.PipelineError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    for p in paths:
        log.info("wrote %s", p)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
