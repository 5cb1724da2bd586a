import numpy as np
import pytest

from fairmetric.evaluation import brute_force_submetric
from fairmetric.representatives import (
    DensityEstimate,
    estimate_density,
    estimate_diffusion,
    greedy_representatives,
    neighbor_mass,
    nontriviality_bound,
    rep_set_size,
    sample_representatives,
    verify_net,
)
from fairmetric.submetric import measure_nontriviality
from fairmetric.universe import GroundMetric, InvalidParameterError, Universe, gen_clustered


@pytest.mark.parametrize("b,delta,budget_split,expected", [
    (0.04, 0.1, False, 139),   # ceil(25 * ln(250))
    (0.9, 0.9, False, 1),      # ceil((1/0.9) * ln(1/0.81))
    (0.04, 0.1, True, 156),    # ceil(25 * ln(500))
    (0.5, 0.5, True, 5),       # ceil(2 * ln(8))
])
def test_rep_set_size_formula(b, delta, budget_split, expected):
    assert rep_set_size(b, delta, budget_split=budget_split) == expected


def test_rep_set_size_rejects_bad_params():
    with pytest.raises(InvalidParameterError):
        rep_set_size(0.0, 0.1)
    with pytest.raises(InvalidParameterError):
        rep_set_size(0.5, 1.5)


def test_sampling_deterministic_under_seed(square40):
    a = sample_representatives(square40, 0.3, 0.2, seed=5)
    b = sample_representatives(square40, 0.3, 0.2, seed=5)
    assert [e.id for e in a] == [e.id for e in b]
    assert len(a) == rep_set_size(0.3, 0.2)


def test_verify_net_extremes(square40):
    full = verify_net(square40.elements, square40, gamma=0.0)
    assert full.covered_weight == pytest.approx(1.0)
    empty = verify_net([], square40, gamma=0.5)
    assert empty.covered_weight == 0.0


def test_net_coverage_bounds_contraction(table60):
    # covered elements lose at most 2*gamma under the merged rep submetric
    gamma = 0.25
    reps = [table60.element_at(i) for i in (0, 20, 40)]
    report = verify_net(reps, table60, gamma)
    sub = brute_force_submetric(table60, reps)
    truth = table60.distance_matrix()
    vals = sub.pairwise(table60)
    mins = np.min([table60.distances_from_id(r.id) for r in reps], axis=0)
    covered = mins <= gamma + 1e-9
    drop = truth - vals
    assert np.all(drop[covered, :] <= 2 * gamma + 1e-9)
    assert report.covered_weight == pytest.approx(float(table60.weights[covered].sum()))


def test_pointwise_triangle_contraction_bound(table60):
    # D(u,v) - D_r(u,v) <= min(2 D(r,u), 2 D(r,v)) over every triple
    truth = table60.distance_matrix()
    for r_idx in range(table60.size):
        row = truth[r_idx]
        rep_vals = np.abs(row[:, None] - row[None, :])
        bound = 2 * np.minimum(row[:, None], row[None, :])
        assert np.all(truth - rep_vals <= bound + 1e-9)


def test_density_degenerate_single_point():
    u = Universe(["only"], np.array([[0.5, 0.5]]), np.array([1.0]), GroundMetric.euclidean(2))
    est = estimate_density(u, gamma=0.1)
    for b, a in est.curve:
        assert a == pytest.approx(1.0)


def test_density_curve_monotone_and_anchored(square40):
    est = estimate_density(square40, gamma=0.2)
    assert est.a_at(0.0) == pytest.approx(1.0)
    a_vals = [a for _, a in est.curve]
    assert all(x >= y - 1e-12 for x, y in zip(a_vals, a_vals[1:]))


def test_density_matches_direct_count(square40):
    est = estimate_density(square40, gamma=0.3)
    mass = neighbor_mass(square40, 0.3)
    for b in (0.1, 0.3, 0.5):
        direct = float(square40.weights[mass >= b - 1e-9].sum())
        assert est.a_at(b) == pytest.approx(direct)


def test_diffusion_tail_and_monotonicity(square40):
    beyond = estimate_diffusion(square40, zeta=1.0)
    assert beyond.p == pytest.approx(0.0)
    ps = [estimate_diffusion(square40, z).p for z in np.arange(0.1, 1.0, 0.1)]
    assert all(p1 >= p2 - 1e-12 for p1, p2 in zip(ps, ps[1:]))


def test_diffusion_on_two_clusters():
    u = gen_clustered(100, 2, spread=0.01, seed=3)
    est = estimate_diffusion(u, zeta=0.4)
    assert est.p == pytest.approx(0.5, abs=0.02)


@pytest.mark.parametrize("p,w,eps,expected", [
    (0.7, 1.0, 0.0, 0.7),
    (0.9, 0.8, 0.0, 0.86),
    (0.1, 0.0, 0.5, 0.0),
])
def test_nontriviality_bound_arithmetic(p, w, eps, expected):
    assert nontriviality_bound(p, w, eps) == pytest.approx(expected)


def test_net_sampling_and_bound_consistency():
    # on a clustered universe, whenever the sampled reps 3*gamma-cover the
    # measured dense weight, the merged submetric meets the diffusion bound
    u = gen_clustered(160, 4, spread=0.02, seed=1)
    gamma, b, delta, c = 0.05, 0.18, 0.1, 0.5
    dens = estimate_density(u, gamma)
    a = dens.a_at(b)
    assert a > 0.5
    zeta = 6 * gamma / (1 - c)
    p = estimate_diffusion(u, zeta).p
    size = rep_set_size(b, delta)
    passes = 0
    for seed in range(20):
        reps = sample_representatives(u, b, delta, seed=seed)
        report = verify_net(reps, u, 3 * gamma)
        if report.covered_weight < a:
            continue
        passes += 1
        unique = list({r.id: r for r in reps}.values())
        sub = brute_force_submetric(u, unique)
        beta = measure_nontriviality(sub, u, c, exhaustive=True).beta
        assert beta >= nontriviality_bound(p, report.covered_weight) - 1e-12
    assert passes >= 17  # delta=0.1 plus slack


def test_greedy_net_beats_random_at_same_size():
    u = gen_clustered(120, 4, spread=0.03, seed=2)
    gamma = 0.06
    greedy = greedy_representatives(u, gamma, max_reps=4)
    random_reps = sample_representatives(u, 0.45, 0.5, seed=0)[:4]
    w_greedy = verify_net(greedy, u, gamma).covered_weight
    w_random = verify_net(random_reps, u, gamma).covered_weight
    assert w_greedy >= w_random - 1e-9
    assert w_greedy > 0.9


def test_density_csv_rows(square40):
    est = estimate_density(square40, gamma=0.2)
    rows = est.csv_rows()
    assert rows[0].startswith("0.2,")
    assert len(rows) == len(est.curve)
