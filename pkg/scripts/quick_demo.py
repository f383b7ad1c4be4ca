"""Desk-scale walkthrough of the gated online loop.

Runs the gated approach and the always-invoke baseline on one seeded blobs
dataset, prints the timesteps around the gate so the prediction/skip behaviour
is visible, then compares totals. Finishes in well under a minute.
"""
from __future__ import annotations

import argparse

from rtautoml import rng as rngmod
from rtautoml.bench import DatasetSpec, execute_approach
from rtautoml.clusterapp import stratified_two_folds
from rtautoml.core import RunConfig
from rtautoml.ga import GaParams


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--timesteps", type=int, default=40)
    parser.add_argument("--theta-t", type=int, default=20)
    parser.add_argument("--theta-p", type=float, default=0.85)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--learner", default="gbt", choices=("knn", "rf", "gbt"))
    args = parser.parse_args()

    spec = DatasetSpec(kind="blobs", n=200, k_true=3, d=4, separation=8.0)
    dataset = spec.realise(args.seed)
    fold1, fold2 = stratified_two_folds(dataset,
                                        rngmod.child_rng(args.seed, rngmod.FOLD))
    config = RunConfig(total_timesteps=args.timesteps, theta_t=args.theta_t,
                       theta_p=args.theta_p, meta_learner_kind=args.learner,
                       seed=args.seed,
                       ga_params=GaParams(population_size=30, generations=15))

    print(f"dataset {spec.label()}  fold2 n={len(fold2)}  "
          f"N={args.timesteps}  gate={config.gate_timestep}  "
          f"theta_p={args.theta_p}  learner={args.learner}")

    approach = f"onmar_{args.learner}"
    gated = execute_approach(approach, config, fold1, fold2,
                             n_landscape_samples=32)
    base = execute_approach("baseline", config, fold1, fold2,
                            n_landscape_samples=32)

    lo = max(0, config.gate_timestep - 3)
    hi = min(args.timesteps, config.gate_timestep + 6)
    print(f"\n{approach} timesteps {lo}..{hi}:")
    print(f"{'t':>4} {'predicted':>10} {'engine':>7} {'accuracy':>9}")
    for rec in gated.runlog.records[lo:hi + 1]:
        pred = "-" if rec.predicted_performance is None \
            else f"{rec.predicted_performance:.3f}"
        print(f"{rec.timestep:>4} {pred:>10} "
              f"{'yes' if rec.ga_invoked else 'skip':>7} "
              f"{rec.actual_performance:>9.3f}")

    print(f"\n{'':14} {'engine calls':>12} {'wall (s)':>9} {'final acc':>10}")
    for run in (gated, base):
        print(f"{run.approach:<14} {run.ga_invocations:>12} "
              f"{run.wall_seconds:>9.2f} {run.final_accuracy:>10.3f}")


if __name__ == "__main__":
    main()
