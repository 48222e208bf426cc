"""Shared fixtures: seeded random tensors and a small phantom benchmark on disk."""

import numpy as np
import pytest

from phantom import PhantomSpec, generate_benchmark
from segmenter import TrainConfig
from tensor_io import NUM_CLASSES, LabelMap, ProbMap

# Large steps and a short schedule keep simulations quick in tests.
FAST_TRAIN = TrainConfig(learning_rate=1.0, max_epochs=40, patience=10)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def make_labels(rng):
    def _make(shape, classes=NUM_CLASSES):
        return LabelMap(rng.integers(0, classes, size=shape, dtype=np.uint8))
    return _make


@pytest.fixture
def make_probmap(rng):
    def _make(shape):
        p = rng.random(tuple(shape) + (NUM_CLASSES,)) + 1e-3
        return ProbMap(p / p.sum(axis=-1, keepdims=True))
    return _make


@pytest.fixture
def fast_train():
    return FAST_TRAIN


@pytest.fixture(scope="session")
def small_benchmark(tmp_path_factory):
    """2 labeled, 4 pool and 3 test cases of 16x16 phantoms."""
    out = tmp_path_factory.mktemp("benchmark")
    return generate_benchmark(PhantomSpec(size=(16, 16), seed=11), 2, 4, 3, out)
