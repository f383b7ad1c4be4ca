from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rtautoml.clusterapp import LabeledDataset, generate_blobs

settings.register_profile(
    "suite",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture
def rng0() -> np.random.Generator:
    return np.random.default_rng(0)


@pytest.fixture
def tiny_blobs() -> LabeledDataset:
    """24 well-separated two-class points; cheap enough for per-test use."""
    return generate_blobs(24, 2, 2, 8.0, np.random.default_rng(7))


@pytest.fixture
def four_point_dataset() -> LabeledDataset:
    """Two obvious blobs of two points each, for hand-traced steps."""
    X = np.array([[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]])
    return LabeledDataset(X, np.array([0, 0, 1, 1]), name="four")
