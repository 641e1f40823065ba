import numpy as np
import pytest

from svead.data import Dataset


def make_dataset(features, labels, names=None, row_ids=None):
    features = np.asarray(features, dtype=np.float64)
    if names is None:
        names = tuple(f"f{i}" for i in range(features.shape[1]))
    if row_ids is None:
        row_ids = np.arange(features.shape[0])
    return Dataset(features, np.asarray(labels), tuple(names),
                   np.asarray(row_ids))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_imbalanced(rng, n=60, d=3, positive_fraction=0.2):
    n_pos = max(1, int(n * positive_fraction))
    labels = np.zeros(n, dtype=np.int64)
    labels[:n_pos] = 1
    features = rng.normal(size=(n, d))
    features[:n_pos] += 2.0
    return make_dataset(features, labels)
