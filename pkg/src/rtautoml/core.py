"""Run controllers for meta-learner-gated online design and the two-phase
offline variant.

The online loop composes a fresh design per timestep. Early timesteps always
call the design engine; once enough history exists the meta-learner predicts
how the carried design will fare and the engine runs only when that prediction
falls below the performance threshold. Every step appends to the knowledge
repository and refits the meta-learner.

The offline variant splits the work: phase one runs the engine on every
timestep of the first fold to fill the repository (no meta-learner involved);
after pruning, phase two replays the second fold with the meta-learner
choosing among stored designs, never touching the engine.
"""
from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import metalearners, rng as rngmod
from .designs import Design, GeneSchema
from .ga import GaParams
from .metafeatures import MetaFeatureVector

log = logging.getLogger(__name__)

DEFAULT_THETA_P = 0.85


class EngineDesignError(ValueError):
    """The design engine returned a design the schema rejects."""


class EmptyRepositoryError(ValueError):
    """Pruning removed every entry from the knowledge repository."""


@dataclass(frozen=True)
class RunConfig:
    total_timesteps: int = 100
    theta_t: int | None = None
    theta_p: float = DEFAULT_THETA_P
    meta_learner_kind: str = "gbt"
    seed: int = 0
    ga_params: GaParams = field(default_factory=GaParams)
    ml_params: metalearners.MlParams = field(default_factory=metalearners.MlParams)

    def __post_init__(self):
        if self.total_timesteps < 1:
            raise ValueError("total_timesteps must be at least 1")
        if self.theta_t is not None and not 0 <= self.theta_t <= self.total_timesteps:
            raise ValueError("theta_t must lie in [0, total_timesteps]")
        if self.theta_p < 0:
            raise ValueError("theta_p must be non-negative")
        if self.meta_learner_kind not in metalearners.KINDS:
            raise ValueError(f"meta_learner_kind must be one of {metalearners.KINDS}")

    @property
    def gate_timestep(self) -> int:
        """Timestep after which predictions gate the engine (defaults to N // 2)."""
        if self.theta_t is not None:
            return self.theta_t
        return self.total_timesteps // 2


@dataclass(frozen=True, eq=False)
class KnowledgeEntry:
    meta_features: MetaFeatureVector
    design: Design
    performance: float
    timestep: int

    def __post_init__(self):
        if not np.isfinite(self.performance) or not 0.0 <= self.performance <= 1.0:
            raise ValueError("performance must lie in [0, 1]")

    def to_dict(self) -> dict:
        return {"meta_features": self.meta_features.to_dict(),
                "design": self.design.to_dict(),
                "performance": self.performance,
                "timestep": self.timestep}

    @staticmethod
    def from_dict(doc: dict, feature_schema: tuple[str, ...]) -> "KnowledgeEntry":
        return KnowledgeEntry(MetaFeatureVector.from_dict(doc["meta_features"],
                                                          feature_schema),
                              Design.from_dict(doc["design"]),
                              float(doc["performance"]), int(doc["timestep"]))


class KnowledgeRepository:
    """Append-only store of (meta-features, design, performance) triples."""

    def __init__(self, feature_schema: tuple[str, ...], design_schema_id: str):
        self.feature_schema = tuple(feature_schema)
        self.design_schema_id = design_schema_id
        self._entries: list[KnowledgeEntry] = []

    def append(self, entry: KnowledgeEntry) -> None:
        if entry.meta_features.schema != self.feature_schema:
            raise ValueError("entry meta-feature schema does not match repository")
        if entry.design.schema_id != self.design_schema_id:
            raise ValueError("entry design schema does not match repository")
        self._entries.append(entry)

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries)

    def __getitem__(self, i: int) -> KnowledgeEntry:
        return self._entries[i]

    def to_json(self) -> str:
        return json.dumps({"feature_schema": list(self.feature_schema),
                           "design_schema_id": self.design_schema_id,
                           "entries": [e.to_dict() for e in self._entries]})

    @staticmethod
    def from_json(text: str) -> "KnowledgeRepository":
        doc = json.loads(text)
        kr = KnowledgeRepository(tuple(doc["feature_schema"]), doc["design_schema_id"])
        for e in doc["entries"]:
            kr.append(KnowledgeEntry.from_dict(e, kr.feature_schema))
        return kr


def kr_prune(repository: KnowledgeRepository, theta_p: float) -> KnowledgeRepository:
    """Keep entries whose performance is at least theta_p (ties kept).

    Raises EmptyRepositoryError when nothing survives.
    """
    kept = [e for e in repository if e.performance >= theta_p]
    if not kept:
        raise EmptyRepositoryError(
            f"no repository entry reaches theta_p={theta_p}")
    out = KnowledgeRepository(repository.feature_schema, repository.design_schema_id)
    for e in kept:
        out.append(e)
    return out


def kr_prune_or_best(repository: KnowledgeRepository,
                     theta_p: float) -> KnowledgeRepository:
    """Prune, falling back to the single best entry when the cut empties it."""
    try:
        return kr_prune(repository, theta_p)
    except EmptyRepositoryError:
        best = max(repository, key=lambda e: e.performance)
        log.warning("pruning at theta_p=%s emptied the repository; "
                    "keeping the best entry (performance=%.4f)",
                    theta_p, best.performance)
        out = KnowledgeRepository(repository.feature_schema,
                                  repository.design_schema_id)
        out.append(best)
        return out


@dataclass(frozen=True, eq=False)
class RunRecord:
    timestep: int
    design: Design
    actual_performance: float
    predicted_performance: float | None
    ga_invoked: bool
    elapsed_wall_seconds: float

    def to_dict(self) -> dict:
        doc = {"timestep": self.timestep,
               "design": self.design.to_dict(),
               "actual_performance": self.actual_performance,
               "ga_invoked": self.ga_invoked,
               "elapsed_wall_seconds": self.elapsed_wall_seconds}
        if self.predicted_performance is not None:
            doc["predicted_performance"] = self.predicted_performance
        return doc

    @staticmethod
    def from_dict(doc: dict) -> "RunRecord":
        return RunRecord(int(doc["timestep"]), Design.from_dict(doc["design"]),
                         float(doc["actual_performance"]),
                         (float(doc["predicted_performance"])
                          if "predicted_performance" in doc else None),
                         bool(doc["ga_invoked"]),
                         float(doc["elapsed_wall_seconds"]))


@dataclass(eq=False)
class RunLog:
    records: list[RunRecord] = field(default_factory=list)

    def append(self, record: RunRecord) -> None:
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def final_accuracy(self) -> float:
        if not self.records:
            raise ValueError("empty run log")
        return self.records[-1].actual_performance

    def initial_accuracy(self) -> float:
        if not self.records:
            raise ValueError("empty run log")
        return self.records[0].actual_performance

    def total_wall_seconds(self) -> float:
        return float(sum(r.elapsed_wall_seconds for r in self.records))

    def ga_invocations(self) -> int:
        return sum(1 for r in self.records if r.ga_invoked)

    def fingerprint(self) -> str:
        """Canonical JSON of the log with wall-clock timings stripped."""
        rows = []
        for r in self.records:
            doc = r.to_dict()
            doc.pop("elapsed_wall_seconds")
            rows.append(doc)
        return json.dumps(rows, sort_keys=True)

    def to_jsonl(self) -> str:
        return "\n".join(json.dumps(r.to_dict()) for r in self.records) + "\n"

    @staticmethod
    def from_jsonl(text: str) -> "RunLog":
        out = RunLog()
        for line in text.splitlines():
            line = line.strip()
            if line:
                out.append(RunRecord.from_dict(json.loads(line)))
        return out


def _fit_learner(config: RunConfig, repository: KnowledgeRepository,
                 schema: GeneSchema, mode: str,
                 timestep: int) -> metalearners.MetaLearnerModel:
    data = metalearners.TrainingMatrix.from_repository(repository, schema, mode)
    rng = rngmod.child_rng(config.seed, rngmod.LEARNER, timestep)
    return metalearners.fit(config.meta_learner_kind, mode, data,
                            config.ml_params, rng)


def onmar_run(config: RunConfig, dataset, app, engine, extractor,
              repository: KnowledgeRepository | None = None) -> RunLog:
    """Online loop over timesteps 0..total_timesteps inclusive.

    app supplies initial_state(dataset, rng) and
    step(state, design, dataset, rng) -> (state, performance) plus a
    fitness_fn(state, dataset, timestep, seed) factory for the engine.
    When a repository is passed in it receives this run's entries, letting
    callers retain the history.
    """
    schema = app.schema
    if repository is None:
        repository = KnowledgeRepository(extractor.schema, schema.schema_id)
    runlog = RunLog()
    model = None
    design = schema.default_design()
    init_rng = rngmod.child_rng(config.seed, rngmod.INIT)
    state = app.initial_state(dataset, init_rng)
    for t in range(config.total_timesteps + 1):
        t0 = time.perf_counter()
        extract_rng = rngmod.child_rng(config.seed, rngmod.EXTRACT, t)
        mf = extractor.extract(dataset, state, design, t, extract_rng)
        predicted = None
        if t > config.gate_timestep and model is not None:
            predicted = metalearners.predict_performance(model, mf, design)
        invoke = predicted is None or predicted < config.theta_p
        if invoke:
            fitness = app.fitness_fn(state, dataset, t, config.seed)
            ga_rng = rngmod.child_rng(config.seed, rngmod.GA, t)
            proposed = engine.propose(fitness, ga_rng)
            try:
                schema.validate(proposed)
            except ValueError as exc:
                raise EngineDesignError(str(exc)) from exc
            design = proposed
        step_rng = rngmod.child_rng(config.seed, rngmod.STEP, t)
        state, performance = app.step(state, design, dataset, step_rng)
        repository.append(KnowledgeEntry(mf, design, performance, t))
        model = _fit_learner(config, repository, schema, "regress", t)
        runlog.append(RunRecord(t, design, performance, predicted, invoke,
                                time.perf_counter() - t0))
    return runlog


def offmar_phase1(config: RunConfig, dataset, app, engine,
                  extractor) -> tuple[KnowledgeRepository, RunLog]:
    """Engine-per-timestep pass that fills the repository (no meta-learner)."""
    schema = app.schema
    repository = KnowledgeRepository(extractor.schema, schema.schema_id)
    runlog = RunLog()
    design = schema.default_design()
    init_rng = rngmod.child_rng(config.seed, rngmod.INIT)
    state = app.initial_state(dataset, init_rng)
    for t in range(config.total_timesteps + 1):
        t0 = time.perf_counter()
        extract_rng = rngmod.child_rng(config.seed, rngmod.EXTRACT, t)
        mf = extractor.extract(dataset, state, design, t, extract_rng)
        fitness = app.fitness_fn(state, dataset, t, config.seed)
        ga_rng = rngmod.child_rng(config.seed, rngmod.GA, t)
        proposed = engine.propose(fitness, ga_rng)
        try:
            schema.validate(proposed)
        except ValueError as exc:
            raise EngineDesignError(str(exc)) from exc
        design = proposed
        step_rng = rngmod.child_rng(config.seed, rngmod.STEP, t)
        state, performance = app.step(state, design, dataset, step_rng)
        repository.append(KnowledgeEntry(mf, design, performance, t))
        runlog.append(RunRecord(t, design, performance, None, True,
                                time.perf_counter() - t0))
    return repository, runlog


def offmar_phase2(pruned: KnowledgeRepository, config: RunConfig, dataset, app,
                  extractor) -> RunLog:
    """Replay with the meta-learner choosing stored designs; the engine is
    never invoked. The meta-learner trains once, before the first timestep."""
    schema = app.schema
    seed2 = rngmod.child_seed(config.seed, rngmod.PHASE2)
    phase2_config = replace(config, seed=seed2)
    model = _fit_learner(phase2_config, pruned, schema, "design", 0)
    runlog = RunLog()
    design = schema.default_design()
    init_rng = rngmod.child_rng(seed2, rngmod.INIT)
    state = app.initial_state(dataset, init_rng)
    for t in range(config.total_timesteps + 1):
        t0 = time.perf_counter()
        extract_rng = rngmod.child_rng(seed2, rngmod.EXTRACT, t)
        mf = extractor.extract(dataset, state, design, t, extract_rng)
        chosen = metalearners.predict_design(model, mf)
        try:
            schema.validate(chosen)
            design = chosen
        except ValueError:
            log.warning("meta-learner proposed an invalid design at t=%d; "
                        "keeping the previous design", t)
        step_rng = rngmod.child_rng(seed2, rngmod.STEP, t)
        state, performance = app.step(state, design, dataset, step_rng)
        runlog.append(RunRecord(t, design, performance, None, False,
                                time.perf_counter() - t0))
    return runlog
