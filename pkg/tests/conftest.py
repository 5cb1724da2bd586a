import numpy as np
import pytest

from fairmetric.universe import GroundMetric, Universe, gen_uniform_square, random_table_universe


@pytest.fixture(scope="session")
def square40():
    return gen_uniform_square(40, 2, seed=11)


@pytest.fixture(scope="session")
def line64():
    return gen_uniform_square(64, 1, seed=4)


@pytest.fixture(scope="session")
def table60():
    return random_table_universe(60, seed=17)


def make_line_universe(coords, metric=None):
    """Universe on explicit 1-d coordinates in [0,1] (diameter-1 metric)."""
    coords = np.asarray(coords, dtype=float)[:, None]
    ids = [f"p{i:04d}" for i in range(len(coords))]
    w = np.full(len(coords), 1.0 / len(coords))
    return Universe(ids, coords, w, metric or GroundMetric.euclidean(1))


def make_table_universe(matrix):
    matrix = np.asarray(matrix, dtype=float)
    ids = [f"t{i:03d}" for i in range(matrix.shape[0])]
    metric = GroundMetric.table(ids, matrix)
    feats = np.zeros((matrix.shape[0], 1))
    w = np.full(matrix.shape[0], 1.0 / matrix.shape[0])
    return Universe(ids, feats, w, metric)
