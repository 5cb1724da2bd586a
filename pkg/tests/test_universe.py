import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairmetric.universe import (
    Element,
    ForeignElementError,
    GroundMetric,
    InvalidParameterError,
    Universe,
    gen_clustered,
    gen_uniform_square,
    metric_eval,
    random_table_universe,
    validate_metric_matrix,
)


def test_uniform_square_deterministic_under_seed():
    a = gen_uniform_square(4, 2, seed=7)
    b = gen_uniform_square(4, 2, seed=7)
    assert np.array_equal(a.features, b.features)
    assert a.ids == b.ids
    c = gen_uniform_square(4, 2, seed=8)
    assert not np.array_equal(a.features, c.features)


def test_uniform_square_rejects_tiny_n():
    with pytest.raises(InvalidParameterError):
        gen_uniform_square(1, 2, seed=0)
    with pytest.raises(InvalidParameterError):
        gen_uniform_square(4, 0, seed=0)


def test_weights_sum_to_one():
    u = gen_uniform_square(333, 3, seed=2)
    assert abs(u.weights.sum() - 1.0) < 1e-9
    assert np.all(u.weights >= 0)


def test_clustered_single_cluster_has_no_long_distances():
    u = gen_clustered(100, 1, spread=0.01, seed=3)
    d = u.distance_matrix()
    # exhaustive pair enumeration: every distance far below 0.4
    assert float((d >= 0.4).mean()) == 0.0


def test_clustered_two_far_clusters_split_pairs_evenly():
    u = gen_clustered(100, 2, spread=0.01, seed=3)
    # centers at (0.1,0.1) and (0.9,0.9): scaled distance exactly 0.8
    d = u.distance_matrix()
    p = float((d >= 0.4).mean())
    assert p == pytest.approx(0.5, abs=0.02)


def test_clustered_rejects_more_clusters_than_points():
    with pytest.raises(InvalidParameterError):
        gen_clustered(10, 20, spread=0.05, seed=0)
    with pytest.raises(InvalidParameterError):
        gen_clustered(10, 2, spread=0.7, seed=0)


def test_metric_eval_identity_and_diameter():
    metric = GroundMetric.euclidean(2)
    u = Element("a", (0.0, 0.0))
    v = Element("b", (1.0, 1.0))
    assert metric_eval(metric, u, u) == 0.0
    assert metric_eval(metric, u, v) == pytest.approx(1.0)


def test_metric_symmetry_and_triangle_on_random_triples():
    u = gen_uniform_square(200, 2, seed=9)
    d = u.distance_matrix()
    assert np.allclose(d, d.T)
    assert np.all(np.diag(d) == 0)
    assert d.min() >= 0 and d.max() <= 1 + 1e-12
    rng = np.random.default_rng(0)
    idx = rng.integers(0, 200, size=(100_000, 3))
    a, b, c = idx[:, 0], idx[:, 1], idx[:, 2]
    assert np.all(d[a, b] <= d[a, c] + d[c, b] + 1e-9)


@settings(max_examples=50, deadline=None)
@given(p=st.sampled_from([1.0, 2.0, 3.0]), seed=st.integers(0, 100))
def test_weighted_lp_metric_axioms(p, seed):
    metric = GroundMetric.weighted_lp(2, p)
    u = gen_uniform_square(12, 2, seed=seed, metric=metric)
    d = u.distance_matrix()
    assert np.allclose(d, d.T)
    assert d.max() <= 1 + 1e-9
    for k in range(12):
        assert np.all(d <= d[:, k, None] + d[None, k, :] + 1e-9)


def test_table_universe_validates_axioms(table60):
    d = table60.distance_matrix()
    validate_metric_matrix(d)


def test_table_validation_rejects_bad_matrices():
    bad = np.array([[0.0, 0.5], [0.4, 0.0]])
    with pytest.raises(InvalidParameterError):
        validate_metric_matrix(bad)
    tri = np.array([[0.0, 0.9, 0.1], [0.9, 0.0, 0.1], [0.1, 0.1, 0.0]])
    with pytest.raises(InvalidParameterError):
        validate_metric_matrix(tri)


def test_distance_rejects_foreign_elements(square40):
    alien = Element("alien", (0.5, 0.5))
    with pytest.raises(ForeignElementError):
        square40.distance(alien, square40.element_at(0))
    with pytest.raises(ForeignElementError):
        square40.index_of("nope")


def test_serialization_round_trip(square40):
    text = square40.to_json()
    back = Universe.from_json(text)
    assert back.ids == square40.ids
    assert np.array_equal(back.features, square40.features)
    assert np.array_equal(back.weights, square40.weights)
    assert back.to_json() == text


def test_table_serialization_round_trip(table60):
    back = Universe.from_json(table60.to_json())
    assert np.allclose(back.distance_matrix(), table60.distance_matrix())


def test_pair_distances_matches_matrix(square40):
    d = square40.distance_matrix()
    rng = np.random.default_rng(1)
    ii = rng.integers(0, 40, 500)
    jj = rng.integers(0, 40, 500)
    assert np.allclose(square40.pair_distances(ii, jj), d[ii, jj])


def test_generation_is_pure_function_of_params():
    u1 = gen_clustered(60, 3, 0.04, seed=5)
    u2 = gen_clustered(60, 3, 0.04, seed=5)
    assert u1.to_json() == u2.to_json()
    t1 = random_table_universe(30, seed=2)
    t2 = random_table_universe(30, seed=2)
    assert t1.to_json() == t2.to_json()
