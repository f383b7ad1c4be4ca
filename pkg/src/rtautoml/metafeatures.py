"""Meta-feature extraction: dataset statistics plus landscape and clustering features.

The extractor produces a fixed-width vector under a stable schema. Undefined
raw values (NaN/inf) become the sentinel 0.0 and are flagged in a parallel
validity mask.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import cluster_metrics as cm
from .clusterapp import ClusterState, LabeledDataset, design_k, design_metric
from .designs import Design
from .ela import (DISPERSION_QUANTILES, ela_dispersion, ela_information_content,
                  ela_meta_model, ela_nbc, ela_y_distribution)
from .landscape import LandscapeSample, build_landscape_grid, latin_hypercube_sample

SENTINEL = 0.0

DEFAULT_LANDSCAPE_SAMPLES = 64

_Y_DIST_KEYS = ("y_skewness", "y_kurtosis", "y_n_peaks")
_META_MODEL_KEYS = ("mm_r2_lin_adj", "mm_lin_coef_min", "mm_lin_coef_max",
                    "mm_r2_quad_adj", "mm_quad_coef_min", "mm_quad_coef_max")
_DISP_KEYS = tuple(f"disp_{kind}_{int(round(q * 100)):02d}"
                   for q in DISPERSION_QUANTILES for kind in ("ratio", "diff"))
_IC_KEYS = ("ic_h_max", "ic_settling_sensitivity", "ic_eps_s", "ic_m0_ratio",
            "ic_initial_partial_info")
_NBC_KEYS = ("nbc_sd_ratio", "nbc_mean_ratio", "nbc_dist_correlation", "nbc_cv_ratio",
             "nbc_indegree_cv")
_DATASET_KEYS = ("ds_imbalance", "ds_classes", "ds_instances", "timestep")
_EXT_KEYS = tuple(f"ext_{k}" for k in ("ari", "ami", "homogeneity", "completeness",
                                       "v_measure", "fowlkes_mallows"))
_INT_KEYS = tuple(f"int_{k}" for k in ("silhouette", "davies_bouldin", "calinski_harabasz"))
_PC_KEYS = ("pc_same_same", "pc_same_diff", "pc_diff_same", "pc_diff_diff")
_IX_KEYS = ("ix_max", "ix_mean", "ix_entropy")
_CD_KEYS = tuple(f"cd_{m}" for m in cm.CENTROID_METRICS) + ("cd_hamming",)

FEATURE_SCHEMA: tuple[str, ...] = (_Y_DIST_KEYS + _META_MODEL_KEYS + _DISP_KEYS
                                   + _IC_KEYS + _NBC_KEYS + _DATASET_KEYS
                                   + _EXT_KEYS + _INT_KEYS + _PC_KEYS + _IX_KEYS
                                   + _CD_KEYS + cm.PMF_KEYS + ("accuracy",))


@dataclass(frozen=True)
class DatasetStats:
    imbalance: float
    classes: int
    instances: int


def dataset_stats(dataset: LabeledDataset) -> DatasetStats:
    """Class imbalance ((max - min count) / n), class count, and instance count."""
    counts = np.bincount(np.unique(dataset.labels, return_inverse=True)[1])
    return DatasetStats(imbalance=float((counts.max() - counts.min()) / len(dataset)),
                        classes=int(len(counts)), instances=len(dataset))


@dataclass(frozen=True, eq=False)
class MetaFeatureVector:
    """Fixed-width feature vector with its schema and a validity mask."""

    values: np.ndarray
    schema: tuple[str, ...]
    valid: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        valid = np.asarray(self.valid, dtype=bool)
        if values.ndim != 1 or len(values) != len(self.schema) or len(valid) != len(values):
            raise ValueError("values, schema, and valid mask must align")
        if not np.all(np.isfinite(values)):
            raise ValueError("values must be finite after sentinel substitution")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "schema", tuple(self.schema))
        object.__setattr__(self, "valid", valid)

    def to_dict(self) -> dict:
        return {"values": self.values.tolist(), "valid": self.valid.astype(int).tolist()}

    @staticmethod
    def from_dict(d: dict, schema: tuple[str, ...]) -> "MetaFeatureVector":
        return MetaFeatureVector(np.asarray(d["values"], dtype=float), schema,
                                 np.asarray(d["valid"], dtype=bool))


def build_landscape(dataset: LabeledDataset, design: Design, n_samples: int,
                    rng: np.random.Generator) -> LandscapeSample:
    """LHS sample of flattened k-centroid sets scored by nearest-centroid accuracy.

    k and the distance measure come from the design; bounds tile the data box
    k times.
    """
    return build_landscape_grid(dataset.features, dataset.labels, design_k(design),
                                design_metric(design), n_samples, rng)


class ClusteringMetaFeatureExtractor:
    """Assembles the meta-feature vector for a clustering state at a timestep."""

    def __init__(self, n_landscape_samples: int = DEFAULT_LANDSCAPE_SAMPLES):
        if n_landscape_samples < 3:
            raise ValueError("need at least three landscape samples")
        self.n_landscape_samples = n_landscape_samples
        self._schema = FEATURE_SCHEMA

    @property
    def schema(self) -> tuple[str, ...]:
        return self._schema

    def extract(self, dataset: LabeledDataset, state: ClusterState, design: Design,
                timestep: int, rng: np.random.Generator) -> MetaFeatureVector:
        feats: dict[str, float] = {}

        ls = build_landscape(dataset, design, self.n_landscape_samples, rng)
        feats.update(ela_y_distribution(ls))
        if len(ls) >= ls.xs.shape[1] + 2:
            mm = ela_meta_model(ls)
            feats.update({k: v for k, v in mm.items()
                          if not k.endswith("rank_deficient")})
        else:
            # too few samples to fit the meta-model; sentinel policy applies
            feats.update({k: float("nan") for k in _META_MODEL_KEYS})
        feats.update(ela_dispersion(ls))
        feats.update(ela_information_content(ls))
        feats.update(ela_nbc(ls))

        stats = dataset_stats(dataset)
        feats["ds_imbalance"] = stats.imbalance
        feats["ds_classes"] = float(stats.classes)
        feats["ds_instances"] = float(stats.instances)
        feats["timestep"] = float(timestep)

        pred = state.clustering.assignments
        truth = dataset.labels
        for k, v in cm.external_scores(pred, truth).items():
            feats[f"ext_{k}"] = v
        for k, v in cm.internal_scores(dataset.features, pred).items():
            feats[f"int_{k}"] = v
        pc = cm.pair_confusion(pred, truth)
        feats["pc_same_same"] = float(pc[0, 0])
        feats["pc_same_diff"] = float(pc[0, 1])
        feats["pc_diff_same"] = float(pc[1, 0])
        feats["pc_diff_diff"] = float(pc[1, 1])
        feats.update(cm.intersection_cardinalities(pred, truth)[1])
        if len(state.clustering.centroids) >= 2:
            feats.update(cm.centroid_distance_features(state.clustering.centroids))
        else:
            feats.update({k: float("nan") for k in _CD_KEYS})
        feats.update(cm.pmf_features(pred))
        feats["accuracy"] = cm.clustering_accuracy(pred, truth)

        values = np.empty(len(self._schema))
        valid = np.empty(len(self._schema), dtype=bool)
        for i, name in enumerate(self._schema):
            v = float(feats[name])
            ok = np.isfinite(v)
            values[i] = v if ok else SENTINEL
            valid[i] = ok
        return MetaFeatureVector(values, self._schema, valid)


def feature_schema_json(extractor: ClusteringMetaFeatureExtractor | None = None) -> str:
    """The feature schema as a JSON document (names in vector order)."""
    schema = extractor.schema if extractor is not None else FEATURE_SCHEMA
    return json.dumps({"features": list(schema), "sentinel": SENTINEL}, indent=2)


__all__ = [
    "ClusteringMetaFeatureExtractor", "DatasetStats", "FEATURE_SCHEMA",
    "LandscapeSample", "MetaFeatureVector", "SENTINEL", "build_landscape",
    "dataset_stats", "feature_schema_json", "latin_hypercube_sample",
]
