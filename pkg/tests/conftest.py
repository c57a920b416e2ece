import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def batch_mean_se(x, batches=50):
    """Mean and batch-means standard error for a correlated series."""
    x = np.asarray(x, dtype=float)
    m = x.size // batches
    means = x[: m * batches].reshape(batches, m).mean(axis=1)
    return x.mean(), means.std(ddof=1) / np.sqrt(batches)
