"""Real-time AutoML for composable clustering.

A design engine (genetic algorithm) composes a clustering algorithm at each
timestep. A meta-learner trained on landscape and clustering meta-features
predicts the carried design's performance and gates the engine online, or
replays stored designs offline after an engine-only first phase. A benchmark
harness compares the approaches with exact Mann-Whitney U statistics.
"""
from .bench import (APPROACHES, ComparisonReport, DatasetSpec, ExperimentSpec,
                    accuracy_at_seconds, accuracy_gain_per_second,
                    accuracy_per_second, aggregate_results_dir,
                    diagnostics_predicted_vs_actual, execute_approach,
                    run_experiment)
from .clusterapp import (CLUSTER_SCHEMA_ID, ComposableClustering,
                         DatasetFormatError, LabeledDataset,
                         build_cluster_schema, generate_blobs, load_csv,
                         stratified_two_folds)
from .cluster_metrics import clustering_accuracy
from .core import (EmptyRepositoryError, EngineDesignError, KnowledgeEntry,
                   KnowledgeRepository, RunConfig, RunLog, RunRecord, kr_prune,
                   kr_prune_or_best, offmar_phase1, offmar_phase2, onmar_run)
from .designs import CategoricalGene, Design, GeneSchema, NumericGene
from .ga import GaDesignEngine, GaParams, evolve
from .metafeatures import (FEATURE_SCHEMA, ClusteringMetaFeatureExtractor,
                           MetaFeatureVector)
from .metalearners import (MetaLearnerModel, MlParams, TrainingMatrix, fit,
                           model_from_json, model_to_json, predict_design,
                           predict_performance)
from .stats import ApproachRanking, MwuResult, mann_whitney_u, rank_approaches

__version__ = "0.1.0"

__all__ = [
    "APPROACHES", "ApproachRanking", "CLUSTER_SCHEMA_ID", "CategoricalGene",
    "ClusteringMetaFeatureExtractor", "ComparisonReport", "ComposableClustering",
    "DatasetFormatError", "DatasetSpec", "Design", "EmptyRepositoryError",
    "EngineDesignError", "ExperimentSpec", "FEATURE_SCHEMA", "GaDesignEngine",
    "GaParams", "GeneSchema", "KnowledgeEntry", "KnowledgeRepository",
    "LabeledDataset", "MetaFeatureVector", "MetaLearnerModel", "MlParams",
    "MwuResult", "NumericGene", "RunConfig", "RunLog", "RunRecord",
    "TrainingMatrix", "accuracy_at_seconds", "accuracy_gain_per_second",
    "accuracy_per_second", "aggregate_results_dir", "build_cluster_schema",
    "clustering_accuracy", "diagnostics_predicted_vs_actual", "evolve",
    "execute_approach", "fit", "generate_blobs", "kr_prune", "kr_prune_or_best",
    "load_csv", "mann_whitney_u", "model_from_json", "model_to_json",
    "offmar_phase1", "offmar_phase2", "onmar_run", "predict_design",
    "predict_performance", "rank_approaches", "run_experiment",
    "stratified_two_folds",
]
