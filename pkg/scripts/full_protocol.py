"""Full benchmark protocol: every approach, 30 seeded repeats, N=100.

Sweeps all seven approaches on seeded blobs, persists per-run artifacts plus
report.json and CSV tables to the output directory, and prints the ranking.
Expect hours at the default scale; use --repeats/--timesteps/--workers to
scale down or parallelise.
"""
from __future__ import annotations

import argparse
from statistics import median

from rtautoml.bench import (APPROACHES, DatasetSpec, ExperimentSpec,
                            run_experiment)
from rtautoml.core import RunConfig


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results", help="results directory")
    parser.add_argument("--repeats", type=int, default=30)
    parser.add_argument("--timesteps", type=int, default=100)
    parser.add_argument("--theta-p", type=float, default=0.85)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--approach", action="append", default=None,
                        choices=APPROACHES,
                        help="restrict to an approach; repeat for several")
    args = parser.parse_args()

    spec = ExperimentSpec(
        approaches=tuple(args.approach) if args.approach else APPROACHES,
        dataset=DatasetSpec(kind="blobs", n=200, k_true=3, d=4, separation=8.0),
        run_config=RunConfig(total_timesteps=args.timesteps,
                             theta_p=args.theta_p, seed=args.seed),
        repeats=args.repeats, out_dir=args.out, workers=args.workers)
    report = run_experiment(spec)

    print(f"\n{'approach':<12} {'rank':>4} {'wins':>4} {'med acc':>8} "
          f"{'med wall':>9} {'med engine':>11} {'acc/s':>8}")
    order = sorted(report.approaches, key=lambda a: report.ranks[a])
    for a in order:
        print(f"{a:<12} {report.ranks[a]:>4} {report.wins[a]:>4} "
              f"{median(report.samples[a]):>8.3f} "
              f"{median(report.runtimes[a]):>9.2f} "
              f"{median(report.ga_invocations[a]):>11.0f} "
              f"{report.acc_per_second[a]:>8.4f}")
    for a, repeats in report.incomplete.items():
        if repeats:
            print(f"warning: {a} failed on repeats {repeats}")
    print(f"\nwrote report.json and CSV tables under {args.out}/")


if __name__ == "__main__":
    main()
