import numpy as np
import pytest

from fairaudit import Dataset, Task


@pytest.fixture
def binary_dataset():
    """Small two-group binary dataset with a learnable signal."""
    rng = np.random.default_rng(42)
    n = 400
    group = (rng.random(n) < 0.4).astype(np.int64)
    x = rng.normal(size=(n, 3)) + group[:, None].astype(float)
    p = 1.0 / (1.0 + np.exp(-(x[:, 0] + 0.5 * x[:, 1] - 0.3)))
    y = (rng.random(n) < p).astype(np.float64)
    return Dataset(
        features=x,
        group=group,
        outcome=y,
        task=Task.BINARY,
        column_names=("f0", "f1", "f2"),
    )


@pytest.fixture
def regression_dataset():
    rng = np.random.default_rng(7)
    n = 300
    group = (rng.random(n) < 0.5).astype(np.int64)
    x = rng.normal(size=(n, 2))
    y = x[:, 0] * 2.0 - x[:, 1] + rng.normal(0, 0.1, n)
    return Dataset(
        features=x,
        group=group,
        outcome=y,
        task=Task.REGRESSION,
        column_names=("f0", "f1"),
    )
