import os

import numpy as np
import pytest

from fairrepair import EmpiricalMeasure, LabeledDataset

# 1-d fixture with group sizes 4 and 7 and strictly sorted distinct points:
# the monotone coupling is the unique optimum, so the optimal matrix is
# fully determined by the marginals.
X0_47 = np.array([0.5, 1.5, 2.5, 3.5])
X1_47 = np.array([0.2, 0.8, 1.4, 2.0, 2.6, 3.2, 3.8])

GAMMA_47 = np.array(
    [
        [1 / 7, 1 / 4 - 1 / 7, 0, 0, 0, 0, 0],
        [0, 2 / 7 - 1 / 4, 1 / 7, 1 / 14, 0, 0, 0],
        [0, 0, 0, 1 / 14, 1 / 7, 2 / 7 - 1 / 4, 0],
        [0, 0, 0, 0, 0, 1 / 4 - 1 / 7, 1 / 7],
    ]
)


@pytest.fixture
def measures_47():
    return EmpiricalMeasure(X0_47), EmpiricalMeasure(X1_47)


@pytest.fixture
def dataset_47():
    X = np.concatenate([X0_47, X1_47]).reshape(-1, 1)
    s = np.array([0] * 4 + [1] * 7, dtype=np.int8)
    y = np.array([0, 1, 0, 1, 1, 0, 1, 0, 1, 1, 0], dtype=np.int8)
    return LabeledDataset(X, s, y)


def make_random_dataset(rng, n0, n1, d, *, shift=1.5, with_labels=True):
    X = np.concatenate(
        [rng.normal(0.0, 1.0, size=(n0, d)), rng.normal(shift, 1.2, size=(n1, d))]
    )
    s = np.concatenate([np.zeros(n0, np.int8), np.ones(n1, np.int8)])
    y = rng.integers(0, 2, size=n0 + n1).astype(np.int8) if with_labels else None
    perm = rng.permutation(n0 + n1)
    return LabeledDataset(X[perm], s[perm], None if y is None else y[perm])


@pytest.fixture
def adult_csv():
    path = os.environ.get("ADULT_CSV")
    if not path or not os.path.exists(path):
        pytest.skip("Adult dataset not available (set ADULT_CSV to run)")
    return path
