"""Command-line entry points: run experiments, aggregate reports, diagnose
predicted-vs-actual divergence in a run log."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .bench import (APPROACHES, ComparisonReport, DatasetSpec, ExperimentSpec,
                    aggregate_results_dir, diagnostics_predicted_vs_actual,
                    run_experiment, write_report_tables)
from .core import RunConfig, RunLog
from .ga import GaParams
from .metafeatures import DEFAULT_LANDSCAPE_SAMPLES
from .metalearners import MlParams


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rtautoml",
        description="Real-time AutoML benchmark harness for composable clustering")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment sweep")
    run.add_argument("--spec", type=str, default=None,
                     help="JSON experiment spec file (overrides other flags)")
    run.add_argument("--approach", action="append", default=None,
                     choices=APPROACHES,
                     help="approach to run; repeat the flag for several "
                          f"(default: all of {', '.join(APPROACHES)})")
    run.add_argument("--dataset", type=str, default="blobs:200,3,4,8",
                     help="blobs:n,k,d,sep or csv:path")
    run.add_argument("--repeats", type=int, default=30)
    run.add_argument("--timesteps", type=int, default=100)
    run.add_argument("--theta-p", type=float, default=0.85)
    run.add_argument("--theta-t", type=int, default=None,
                     help="gate timestep (default: timesteps // 2)")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out", type=str, default=None,
                     help="results directory (omit to skip persistence)")
    run.add_argument("--learner", type=str, default="gbt",
                     choices=("knn", "rf", "gbt"),
                     help="meta-learner kind used by the baseline approach")
    run.add_argument("--ga-population", type=int, default=None)
    run.add_argument("--ga-generations", type=int, default=None)
    run.add_argument("--landscape-samples", type=int,
                     default=DEFAULT_LANDSCAPE_SAMPLES)
    run.add_argument("--workers", type=int, default=1)

    report = sub.add_parser("report", help="aggregate a results directory")
    report.add_argument("--dir", type=str, required=True)
    report.add_argument("--out", type=str, default=None,
                        help="where to write report.json and CSV tables "
                             "(default: the results directory)")

    diag = sub.add_parser("diagnose",
                          help="predicted-vs-actual divergence for one run log")
    diag.add_argument("--runlog", type=str, required=True,
                      help="path to a runlog.jsonl file")
    diag.add_argument("--delta", type=float, default=0.2)
    diag.add_argument("--window", type=int, default=10)
    diag.add_argument("--out", type=str, default=None,
                      help="optional CSV path for the divergence series")
    return parser


def _spec_from_args(args: argparse.Namespace) -> ExperimentSpec:
    if args.spec is not None:
        return ExperimentSpec.from_json(Path(args.spec).read_text())
    ga_kwargs = {}
    if args.ga_population is not None:
        ga_kwargs["population_size"] = args.ga_population
    if args.ga_generations is not None:
        ga_kwargs["generations"] = args.ga_generations
    config = RunConfig(total_timesteps=args.timesteps, theta_t=args.theta_t,
                       theta_p=args.theta_p, meta_learner_kind=args.learner,
                       seed=args.seed, ga_params=GaParams(**ga_kwargs),
                       ml_params=MlParams())
    approaches = tuple(args.approach) if args.approach else APPROACHES
    return ExperimentSpec(approaches=approaches,
                          dataset=DatasetSpec.from_string(args.dataset),
                          run_config=config, repeats=args.repeats,
                          out_dir=args.out,
                          n_landscape_samples=args.landscape_samples,
                          workers=args.workers)


def _cmd_run(args: argparse.Namespace) -> int:
    spec = _spec_from_args(args)
    report = run_experiment(spec)
    _print_report_summary(report)
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    report = aggregate_results_dir(args.dir)
    out = Path(args.out) if args.out else Path(args.dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json())
    write_report_tables(report, out)
    _print_report_summary(report)
    return 0


def _cmd_diagnose(args: argparse.Namespace) -> int:
    runlog = RunLog.from_jsonl(Path(args.runlog).read_text())
    series, flag = diagnostics_predicted_vs_actual(runlog, delta=args.delta,
                                                   window=args.window)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["timestep", "predicted_minus_actual", "ga_invoked"])
            for r, gap in zip(runlog.records, series):
                w.writerow([r.timestep, "" if np.isnan(gap) else gap,
                            int(r.ga_invoked)])
    doc = {"flag": flag, "delta": args.delta, "window": args.window,
           "series": [None if np.isnan(v) else float(v) for v in series]}
    print(json.dumps(doc))
    return 0


def _print_report_summary(report: ComparisonReport) -> None:
    doc = json.loads(report.to_json())
    summary = {
        "dataset": report.dataset_label,
        "repeats": report.repeats,
        "median_final_accuracy": {
            a: (float(np.median(s)) if s else None)
            for a, s in report.samples.items()},
        "median_wall_seconds": {
            a: (float(np.median(s)) if s else None)
            for a, s in report.runtimes.items()},
        "ranks": doc["ranks"],
        "normalized_rank": doc["normalized_rank"],
        "acc_per_second": doc["acc_per_second"],
        "incomplete": doc["incomplete"],
    }
    print(json.dumps(summary, indent=2))


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "report":
        return _cmd_report(args)
    return _cmd_diagnose(args)


if __name__ == "__main__":
    sys.exit(main())
