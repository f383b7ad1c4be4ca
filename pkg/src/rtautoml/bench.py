"""Experiment harness: seeded sweeps over approaches, statistical comparison,
runtime and accuracy-per-second analysis, and result persistence.

The baseline approach is the online loop with an unreachable performance
threshold, so the design engine fires at every timestep while the rest of the
instrumentation (meta-learner retraining, prediction records) stays identical
to the gated runs. Every approach in repeat i shares that repeat's dataset and
stratified folds: offline runs train on fold 1, and all final accuracies are
measured on fold 2.
"""
from __future__ import annotations

import csv
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from itertools import combinations
from pathlib import Path

import numpy as np

from . import rng as rngmod
from .clusterapp import (ComposableClustering, LabeledDataset, generate_blobs,
                         load_csv, stratified_two_folds)
from .core import (RunConfig, RunLog, kr_prune_or_best, offmar_phase1,
                   offmar_phase2, onmar_run)
from .ga import GaDesignEngine, GaParams
from .metafeatures import ClusteringMetaFeatureExtractor, DEFAULT_LANDSCAPE_SAMPLES
from .metalearners import MlParams
from .stats import mann_whitney_u, rank_approaches

log = logging.getLogger(__name__)

APPROACHES = ("baseline", "onmar_knn", "onmar_rf", "onmar_gbt",
              "offmar_knn", "offmar_rf", "offmar_gbt")
BASELINE_THETA_P = 2.0


def approach_learner_kind(approach: str, default: str) -> str:
    if approach == "baseline":
        return default
    return approach.split("_", 1)[1]


@dataclass(frozen=True)
class DatasetSpec:
    """Either synthetic blobs (seeded per repeat) or a fixed CSV file."""

    kind: str
    n: int = 200
    k_true: int = 3
    d: int = 4
    separation: float = 8.0
    path: str | None = None

    def __post_init__(self):
        if self.kind not in ("blobs", "csv"):
            raise ValueError("dataset kind must be 'blobs' or 'csv'")
        if self.kind == "csv" and not self.path:
            raise ValueError("csv dataset needs a path")

    def realise(self, seed: int) -> LabeledDataset:
        if self.kind == "csv":
            return load_csv(self.path)
        rng = rngmod.child_rng(seed, rngmod.DATA)
        return generate_blobs(self.n, self.k_true, self.d, self.separation, rng)

    def label(self) -> str:
        if self.kind == "csv":
            return Path(self.path).stem
        return f"blobs_n{self.n}_k{self.k_true}_d{self.d}_sep{self.separation:g}"

    def to_dict(self) -> dict:
        if self.kind == "csv":
            return {"kind": "csv", "path": self.path}
        return {"kind": "blobs", "n": self.n, "k_true": self.k_true,
                "d": self.d, "separation": self.separation}

    @staticmethod
    def from_dict(doc: dict) -> "DatasetSpec":
        return DatasetSpec(**doc)

    @staticmethod
    def from_string(text: str) -> "DatasetSpec":
        """Parse 'blobs:n,k,d,sep' or 'csv:path'."""
        kind, _, rest = text.partition(":")
        if kind == "csv" and rest:
            return DatasetSpec(kind="csv", path=rest)
        if kind == "blobs" and rest:
            parts = rest.split(",")
            if len(parts) != 4:
                raise ValueError("blobs dataset needs n,k,d,sep")
            return DatasetSpec(kind="blobs", n=int(parts[0]), k_true=int(parts[1]),
                               d=int(parts[2]), separation=float(parts[3]))
        raise ValueError(f"cannot parse dataset spec {text!r}")


@dataclass(frozen=True)
class ExperimentSpec:
    approaches: tuple[str, ...]
    dataset: DatasetSpec
    run_config: RunConfig = field(default_factory=RunConfig)
    repeats: int = 30
    out_dir: str | None = None
    n_landscape_samples: int = DEFAULT_LANDSCAPE_SAMPLES
    workers: int = 1

    def __post_init__(self):
        if not self.approaches:
            raise ValueError("at least one approach required")
        bad = [a for a in self.approaches if a not in APPROACHES]
        if bad:
            raise ValueError(f"unknown approaches {bad}; valid: {APPROACHES}")
        if len(set(self.approaches)) != len(self.approaches):
            raise ValueError("duplicate approaches")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def to_json(self) -> str:
        doc = {"approaches": list(self.approaches),
               "dataset": self.dataset.to_dict(),
               "repeats": self.repeats,
               "out_dir": self.out_dir,
               "n_landscape_samples": self.n_landscape_samples,
               "workers": self.workers,
               "run_config": {
                   "total_timesteps": self.run_config.total_timesteps,
                   "theta_t": self.run_config.theta_t,
                   "theta_p": self.run_config.theta_p,
                   "meta_learner_kind": self.run_config.meta_learner_kind,
                   "seed": self.run_config.seed,
                   "ga_params": asdict(self.run_config.ga_params),
                   "ml_params": asdict(self.run_config.ml_params)}}
        return json.dumps(doc, indent=2)

    @staticmethod
    def from_json(text: str) -> "ExperimentSpec":
        doc = json.loads(text)
        rc = dict(doc.get("run_config", {}))
        if "ga_params" in rc:
            rc["ga_params"] = GaParams(**rc["ga_params"])
        if "ml_params" in rc:
            rc["ml_params"] = MlParams(**rc["ml_params"])
        return ExperimentSpec(
            approaches=tuple(doc["approaches"]),
            dataset=DatasetSpec.from_dict(doc["dataset"]),
            run_config=RunConfig(**rc),
            repeats=doc.get("repeats", 30),
            out_dir=doc.get("out_dir"),
            n_landscape_samples=doc.get("n_landscape_samples",
                                        DEFAULT_LANDSCAPE_SAMPLES),
            workers=doc.get("workers", 1))


@dataclass(eq=False)
class ApproachRun:
    """One completed (approach, repeat) cell."""

    approach: str
    repeat: int
    seed: int
    runlog: RunLog
    phase1_log: RunLog | None
    repository_json: str
    wall_seconds: float

    @property
    def final_accuracy(self) -> float:
        return self.runlog.final_accuracy()

    @property
    def ga_invocations(self) -> int:
        count = self.runlog.ga_invocations()
        if self.phase1_log is not None:
            count += self.phase1_log.ga_invocations()
        return count


def execute_approach(approach: str, config: RunConfig, fold1: LabeledDataset,
                     fold2: LabeledDataset, n_landscape_samples: int,
                     repeat: int = 0) -> ApproachRun:
    """Run one approach on one repeat's folds and time the whole thing.

    Online approaches (baseline included) run on fold 2 only; offline ones run
    phase 1 on fold 1 and are evaluated by their phase-2 log on fold 2.
    """
    app = ComposableClustering()
    engine = GaDesignEngine(app.schema, config.ga_params)
    extractor = ClusteringMetaFeatureExtractor(n_landscape_samples)
    from .core import KnowledgeRepository
    t0 = time.perf_counter()
    phase1_log = None
    if approach == "baseline":
        cfg = replace(config, theta_p=BASELINE_THETA_P)
        repository = KnowledgeRepository(extractor.schema, app.schema.schema_id)
        runlog = onmar_run(cfg, fold2, app, engine, extractor, repository)
    elif approach.startswith("onmar"):
        repository = KnowledgeRepository(extractor.schema, app.schema.schema_id)
        runlog = onmar_run(config, fold2, app, engine, extractor, repository)
    elif approach.startswith("offmar"):
        repository, phase1_log = offmar_phase1(config, fold1, app, engine, extractor)
        pruned = kr_prune_or_best(repository, config.theta_p)
        runlog = offmar_phase2(pruned, config, fold2, app, extractor)
    else:
        raise ValueError(f"unknown approach {approach!r}")
    wall = time.perf_counter() - t0
    return ApproachRun(approach=approach, repeat=repeat, seed=config.seed,
                       runlog=runlog, phase1_log=phase1_log,
                       repository_json=repository.to_json(), wall_seconds=wall)


def _job(args) -> tuple[int, str, ApproachRun]:
    repeat, approach, config, fold1, fold2, n_samples = args
    return repeat, approach, execute_approach(approach, config, fold1, fold2,
                                              n_samples, repeat)


@dataclass(eq=False)
class ComparisonReport:
    dataset_label: str
    approaches: tuple[str, ...]
    repeats: int
    samples: dict[str, list[float]]
    runtimes: dict[str, list[float]]
    ga_invocations: dict[str, list[int]]
    pairwise_p: dict[str, float]
    wins: dict[str, int]
    ranks: dict[str, int]
    average_rank: dict[str, float]
    normalized_rank: dict[str, int]
    acc_per_second: dict[str, float]
    incomplete: dict[str, list[int]]

    def __post_init__(self):
        for key, p in self.pairwise_p.items():
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"p-value for {key} outside [0, 1]")

    def to_json(self) -> str:
        return json.dumps({
            "dataset_label": self.dataset_label,
            "approaches": list(self.approaches),
            "repeats": self.repeats,
            "samples": self.samples,
            "runtimes": self.runtimes,
            "ga_invocations": self.ga_invocations,
            "pairwise_p": self.pairwise_p,
            "wins": self.wins,
            "ranks": self.ranks,
            "average_rank": self.average_rank,
            "normalized_rank": self.normalized_rank,
            "acc_per_second": self.acc_per_second,
            "incomplete": self.incomplete,
        }, indent=2, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "ComparisonReport":
        doc = json.loads(text)
        return ComparisonReport(
            dataset_label=doc["dataset_label"],
            approaches=tuple(doc["approaches"]),
            repeats=doc["repeats"],
            samples=doc["samples"],
            runtimes=doc["runtimes"],
            ga_invocations=doc["ga_invocations"],
            pairwise_p=doc["pairwise_p"],
            wins=doc["wins"],
            ranks=doc["ranks"],
            average_rank=doc["average_rank"],
            normalized_rank=doc["normalized_rank"],
            acc_per_second=doc["acc_per_second"],
            incomplete=doc["incomplete"])

    def fingerprint(self) -> str:
        """Canonical JSON with wall-clock-derived fields stripped."""
        doc = json.loads(self.to_json())
        doc.pop("runtimes")
        doc.pop("acc_per_second")
        return json.dumps(doc, sort_keys=True)


def accuracy_gain_per_second(runlog: RunLog) -> float:
    """Accuracy gain over the run divided by total wall seconds (0 when
    degenerate)."""
    if len(runlog) == 0:
        return 0.0
    secs = runlog.total_wall_seconds()
    if secs <= 0:
        return 0.0
    return (runlog.final_accuracy() - runlog.initial_accuracy()) / secs


def accuracy_at_seconds(runlog: RunLog, at_seconds) -> np.ndarray:
    """Piecewise-constant accuracy trace sampled at the given wall-clock marks.

    A record's accuracy becomes current once its timestep completes; queries
    before the first completion clamp to the first record.
    """
    if len(runlog) == 0:
        raise ValueError("empty run log")
    completion = np.cumsum([r.elapsed_wall_seconds for r in runlog.records])
    acc = np.asarray([r.actual_performance for r in runlog.records])
    done = np.searchsorted(completion, np.asarray(at_seconds, dtype=float),
                           side="right")
    return acc[np.clip(done - 1, 0, len(acc) - 1)]


def accuracy_per_second(runlogs: dict) -> dict:
    """Min-max-normalised mean accuracy gain per second.

    runlogs maps a cell key (for example (dataset, approach)) to that cell's
    RunLogs. Cells average their per-run gains; the matrix is then min-max
    normalised over finite cells. A degenerate matrix (single value span)
    collapses to zeros.
    """
    raw = {}
    for cell, logs in runlogs.items():
        gains = [accuracy_gain_per_second(lg) for lg in logs]
        raw[cell] = float(np.mean(gains)) if gains else 0.0
    finite = [v for v in raw.values() if np.isfinite(v)]
    if not finite:
        return {cell: 0.0 for cell in raw}
    lo, hi = min(finite), max(finite)
    if hi <= lo:
        return {cell: 0.0 for cell in raw}
    return {cell: (v - lo) / (hi - lo) if np.isfinite(v) else 0.0
            for cell, v in raw.items()}


def diagnostics_predicted_vs_actual(runlog: RunLog, delta: float = 0.2,
                                    window: int = 10) -> tuple[np.ndarray, bool]:
    """Per-timestep (predicted - actual) series plus a pathology flag.

    The flag fires when the gap exceeds delta for window consecutive
    timesteps during which the engine was never invoked. Timesteps without a
    prediction contribute NaN to the series and break any streak.
    """
    series = np.full(len(runlog), np.nan)
    streak = 0
    flag = False
    for i, r in enumerate(runlog.records):
        if r.predicted_performance is not None:
            series[i] = r.predicted_performance - r.actual_performance
        if r.ga_invoked or r.predicted_performance is None:
            streak = 0
        elif series[i] > delta:
            streak += 1
            if streak >= window:
                flag = True
        else:
            streak = 0
    return series, flag


def _persist_run(out_dir: Path, spec: ExperimentSpec, run: ApproachRun,
                 config: RunConfig) -> None:
    run_dir = out_dir / f"{run.approach}__{spec.dataset.label()}" / f"run_{run.repeat:03d}"
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "runlog.jsonl").write_text(run.runlog.to_jsonl())
    if run.phase1_log is not None:
        (run_dir / "phase1.jsonl").write_text(run.phase1_log.to_jsonl())
    (run_dir / "repository.json").write_text(run.repository_json)
    meta = {"approach": run.approach, "repeat": run.repeat, "seed": run.seed,
            "dataset": spec.dataset.to_dict(),
            "dataset_label": spec.dataset.label(),
            "final_accuracy": run.final_accuracy,
            "wall_seconds": run.wall_seconds,
            "ga_invocations": run.ga_invocations,
            "total_timesteps": config.total_timesteps,
            "theta_t": config.gate_timestep,
            "theta_p": config.theta_p,
            "meta_learner_kind": config.meta_learner_kind}
    (run_dir / "meta.json").write_text(json.dumps(meta, indent=2))


def _aggregate(dataset_label: str, approaches: tuple[str, ...], repeats: int,
               cells: dict[str, list[ApproachRun]],
               incomplete: dict[str, list[int]],
               alpha: float = 0.05) -> ComparisonReport:
    samples = {a: [r.final_accuracy for r in cells[a]] for a in approaches}
    runtimes = {a: [r.wall_seconds for r in cells[a]] for a in approaches}
    ga_counts = {a: [r.ga_invocations for r in cells[a]] for a in approaches}
    pairwise: dict[str, float] = {}
    for a, b in combinations(approaches, 2):
        if not samples[a] or not samples[b]:
            continue
        for alt in ("less", "greater", "two-sided"):
            pairwise[f"{a}|{b}|{alt}"] = mann_whitney_u(samples[a], samples[b],
                                                        alt).pvalue
    rankable = {a: samples[a] for a in approaches if samples[a]}
    if len(rankable) >= 2:
        ranking = rank_approaches(rankable, alpha=alpha)
        wins, ranks = ranking.wins, ranking.ranks
        avg_rank, norm_rank = ranking.average_rank, ranking.normalized_rank
    else:
        only = {a: 1 for a in rankable}
        wins = {a: 0 for a in rankable}
        ranks, norm_rank = dict(only), dict(only)
        avg_rank = {a: 1.0 for a in rankable}
    acc = accuracy_per_second({(dataset_label, a): [r.runlog for r in cells[a]]
                               for a in approaches})
    return ComparisonReport(
        dataset_label=dataset_label,
        approaches=approaches,
        repeats=repeats,
        samples=samples,
        runtimes=runtimes,
        ga_invocations=ga_counts,
        pairwise_p=pairwise,
        wins=wins,
        ranks=ranks,
        average_rank=avg_rank,
        normalized_rank=norm_rank,
        acc_per_second={a: acc[(dataset_label, a)] for a in approaches},
        incomplete=incomplete)


def run_experiment(spec: ExperimentSpec) -> ComparisonReport:
    """Run the sweep and aggregate a comparison report.

    Repeat i derives seed(root, i); every approach in that repeat shares the
    realised dataset and its stratified folds. Failed runs are logged and the
    cell marked incomplete instead of aborting the sweep.
    """
    out_dir = Path(spec.out_dir) if spec.out_dir else None
    jobs = []
    configs: dict[tuple[int, str], RunConfig] = {}
    for i in range(spec.repeats):
        seed_i = rngmod.child_seed(spec.run_config.seed, rngmod.REPEAT, i)
        dataset = spec.dataset.realise(seed_i)
        fold_rng = rngmod.child_rng(seed_i, rngmod.FOLD)
        fold1, fold2 = stratified_two_folds(dataset, fold_rng)
        for approach in spec.approaches:
            kind = approach_learner_kind(approach, spec.run_config.meta_learner_kind)
            config = replace(spec.run_config, seed=seed_i, meta_learner_kind=kind)
            configs[(i, approach)] = config
            jobs.append((i, approach, config, fold1, fold2,
                         spec.n_landscape_samples))

    cells: dict[str, list[ApproachRun]] = {a: [] for a in spec.approaches}
    incomplete: dict[str, list[int]] = {a: [] for a in spec.approaches}

    def consume(repeat: int, approach: str, run: ApproachRun) -> None:
        cells[approach].append(run)
        if out_dir is not None:
            _persist_run(out_dir, spec, run, configs[(repeat, approach)])

    if spec.workers == 1:
        for job in jobs:
            i, approach = job[0], job[1]
            try:
                consume(i, approach, _job(job)[2])
            except Exception:
                log.exception("run failed: approach=%s repeat=%d", approach, i)
                incomplete[approach].append(i)
    else:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            futures = [(job[0], job[1], pool.submit(_job, job)) for job in jobs]
            for i, approach, fut in futures:
                try:
                    consume(i, approach, fut.result()[2])
                except Exception:
                    log.exception("run failed: approach=%s repeat=%d", approach, i)
                    incomplete[approach].append(i)

    report = _aggregate(spec.dataset.label(), spec.approaches, spec.repeats,
                        cells, incomplete)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "report.json").write_text(report.to_json())
        write_report_tables(report, out_dir)
    return report


def aggregate_results_dir(path: str | Path) -> ComparisonReport:
    """Rebuild a ComparisonReport from persisted run directories."""
    root = Path(path)
    metas = sorted(root.glob("*/run_*/meta.json"))
    if not metas:
        raise FileNotFoundError(f"no run metadata found under {root}")
    cells: dict[str, list[ApproachRun]] = {}
    labels = set()
    max_repeat = -1
    for meta_path in metas:
        meta = json.loads(meta_path.read_text())
        runlog = RunLog.from_jsonl((meta_path.parent / "runlog.jsonl").read_text())
        phase1_path = meta_path.parent / "phase1.jsonl"
        phase1 = (RunLog.from_jsonl(phase1_path.read_text())
                  if phase1_path.exists() else None)
        run = ApproachRun(approach=meta["approach"], repeat=meta["repeat"],
                          seed=meta["seed"], runlog=runlog, phase1_log=phase1,
                          repository_json="", wall_seconds=meta["wall_seconds"])
        cells.setdefault(meta["approach"], []).append(run)
        labels.add(meta["dataset_label"])
        max_repeat = max(max_repeat, meta["repeat"])
    if len(labels) != 1:
        raise ValueError(f"results directory mixes datasets: {sorted(labels)}")
    approaches = tuple(a for a in APPROACHES if a in cells)
    incomplete = {a: [] for a in approaches}
    return _aggregate(labels.pop(), approaches, max_repeat + 1, cells, incomplete)


def write_report_tables(report: ComparisonReport, out_dir: str | Path) -> None:
    """Emit plot-ready CSV tables next to the JSON report."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "samples.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["approach", "repeat", "final_accuracy", "wall_seconds",
                    "ga_invocations"])
        for a in report.approaches:
            for i, acc in enumerate(report.samples[a]):
                w.writerow([a, i, acc, report.runtimes[a][i],
                            report.ga_invocations[a][i]])
    with open(out / "pairwise.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["approach_a", "approach_b", "alternative", "pvalue"])
        for key, p in sorted(report.pairwise_p.items()):
            a, b, alt = key.split("|")
            w.writerow([a, b, alt, p])
    with open(out / "ranks.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["approach", "wins", "rank", "average_rank",
                    "normalized_rank", "acc_per_second_normalized"])
        for a in report.approaches:
            if a in report.ranks:
                w.writerow([a, report.wins[a], report.ranks[a],
                            report.average_rank[a], report.normalized_rank[a],
                            report.acc_per_second[a]])
