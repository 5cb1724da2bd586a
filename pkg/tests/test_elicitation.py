import numpy as np
import pytest

from conftest import make_line_universe, make_table_universe
from fairmetric.arbiter import ExactArbiter, LoggingArbiter, TctcArbiter, TctcParams
from fairmetric.elicitation import (
    InconsistentOrderingError,
    ThresholdSpacingError,
    exact_threshold_labels,
    generate_labels,
    merge_orderings,
    ordering_to_submetric,
    tctc_merge_orderings,
    tctc_ordering_to_submetric,
    triplet_ordering,
)
from fairmetric.learning import threshold_fn
from fairmetric.submetric import count_strict_overestimates, merge, rep_submetric
from fairmetric.universe import gen_uniform_square


# ---------------------------------------------------------------------------
# Exact model: orderings
# ---------------------------------------------------------------------------


def test_singleton_ordering_costs_nothing(square40):
    arb = ExactArbiter(square40)
    r = square40.element_at(0)
    ordering = triplet_ordering(arb, [square40.element_at(3)], r)
    assert ordering.items == [square40.ids[3]]
    assert arb.ledger.triplet_count == 0


def test_ordering_matches_brute_force_sort():
    u = gen_uniform_square(64, 2, seed=21)
    arb = ExactArbiter(u)
    r = u.element_at(10)
    ordering = triplet_ordering(arb, u.elements, r)
    d = u.distances_from_id(r.id)
    got = [d[u.index_of(eid)] for eid in ordering.items]
    assert got == sorted(got)
    assert sorted(ordering.items) == sorted(u.ids)


def test_ordering_query_count_is_deterministic_and_bounded():
    for n in (64, 256):
        u = gen_uniform_square(n, 2, seed=3)
        for rep_idx in (0, 1, 2):
            counts = set()
            for _ in range(2):
                arb = ExactArbiter(u)
                triplet_ordering(arb, u.elements, u.element_at(rep_idx))
                counts.add(arb.ledger.triplet_count)
                assert arb.ledger.triplet_count <= n * np.ceil(np.log2(n))
            # same data, same comparator: reruns cost exactly the same
            assert len(counts) == 1


def test_ordering_doubling_ratio():
    counts = []
    for n in (256, 512):
        u = gen_uniform_square(n, 2, seed=5)
        arb = ExactArbiter(u)
        triplet_ordering(arb, u.elements, u.element_at(0))
        counts.append(arb.ledger.triplet_count)
    assert counts[1] / counts[0] <= 2.4


# ---------------------------------------------------------------------------
# Exact model: range splitting
# ---------------------------------------------------------------------------


def equidistant_universe(n=9, radius=0.3):
    # one hub plus n-1 spokes, every spoke at the same distance from the hub
    m = np.full((n, n), 0.1)
    m[0, :] = radius
    m[:, 0] = radius
    np.fill_diagonal(m, 0.0)
    return make_table_universe(m)


def test_equidistant_range_terminates_with_two_queries():
    u = equidistant_universe()
    arb = ExactArbiter(u)
    r = u.element_at(0)
    spokes = u.elements[1:]
    ordering = triplet_ordering(arb, spokes, r)
    vm = ordering_to_submetric(arb, ordering, alpha=0.05)
    assert arb.ledger.real_count == 2
    assert set(vm.values.values()) == {0.3}


def test_split_labels_underestimate_within_alpha():
    u = gen_uniform_square(128, 1, seed=13)
    arb = ExactArbiter(u)
    r = u.element_at(0)
    ordering = triplet_ordering(arb, u.elements, r)
    vm = ordering_to_submetric(arb, ordering, alpha=0.05)
    d = u.distances_from_id(r.id)
    gaps = [d[u.index_of(eid)] - v for eid, v in vm.values.items()]
    assert min(gaps) >= -1e-12          # never above the truth
    assert max(gaps) <= 0.05 + 1e-12    # rounded down by at most alpha


def test_split_real_query_ceiling_large_n():
    u = gen_uniform_square(4096, 2, seed=2)
    arb = ExactArbiter(u)
    r = u.element_at(0)
    ordering = triplet_ordering(arb, u.elements, r)
    ordering_to_submetric(arb, ordering, alpha=0.1)
    bound = 8 * max(1 / 0.1, np.log2(4096))
    assert arb.ledger.by_phase["range-split"].real <= bound


def test_inconsistent_ordering_detected(square40):
    class LyingArbiter(ExactArbiter):
        def o_real(self, a, b):
            return 1.0 - super().o_real(a, b)

    honest = ExactArbiter(square40)
    r = square40.element_at(0)
    ordering = triplet_ordering(honest, square40.elements, r)
    liar = LyingArbiter(square40)
    with pytest.raises(InconsistentOrderingError):
        ordering_to_submetric(liar, ordering, alpha=0.02)


# ---------------------------------------------------------------------------
# Exact model: merged orderings
# ---------------------------------------------------------------------------


def test_merge_single_ordering_equals_plain_split(square40):
    r = square40.element_at(0)
    arb1 = ExactArbiter(square40)
    ordering = triplet_ordering(arb1, square40.elements, r)
    vm_single = ordering_to_submetric(arb1, ordering, alpha=0.1)

    arb2 = ExactArbiter(square40)
    ordering2 = triplet_ordering(arb2, square40.elements, r)
    maps = merge_orderings(arb2, [ordering2], alpha=0.1)
    assert arb2.ledger.quad_count == 0
    assert maps[0].values == vm_single.values


def test_merge_every_rep_within_alpha():
    u = gen_uniform_square(256, 2, seed=8)
    arb = ExactArbiter(u)
    reps = [u.element_at(i) for i in (0, 17, 40, 99)]
    orderings = [triplet_ordering(arb, u.elements, r) for r in reps]
    maps = merge_orderings(arb, orderings, alpha=0.1)
    for vm in maps:
        d = u.distances_from_id(vm.representative)
        gaps = [d[u.index_of(eid)] - v for eid, v in vm.values.items()]
        assert min(gaps) >= -1e-12 and max(gaps) <= 0.1 + 1e-12
    sub = merge([rep_submetric(m) for m in maps])
    assert count_strict_overestimates(sub, u, 0.1) == 0


def test_merge_real_count_within_bound():
    u = gen_uniform_square(512, 2, seed=10)
    arb = ExactArbiter(u)
    reps = [u.element_at(i) for i in range(8)]
    orderings = [triplet_ordering(arb, u.elements, r) for r in reps]
    merge_orderings(arb, orderings, alpha=0.05)
    bound = 8 * max(1 / 0.05, np.log2(8 * 512))
    assert arb.ledger.by_phase["range-split"].real <= bound
    assert arb.ledger.quad_count <= 8 * 512 * np.ceil(np.log2(8)) * 8


def test_engine_determinism_identical_logs():
    u = gen_uniform_square(48, 2, seed=6)
    logs = []
    for _ in range(2):
        arb = LoggingArbiter(ExactArbiter(u))
        reps = [u.element_at(i) for i in (0, 5)]
        orderings = [triplet_ordering(arb, u.elements, r) for r in reps]
        merge_orderings(arb, orderings, alpha=0.1)
        logs.append(arb.to_jsonl())
    # timestamps differ; compare the query/answer sequence
    strip = lambda text: [line.split(', "t":')[0] for line in text.splitlines()]
    assert strip(logs[0]) == strip(logs[1])


# ---------------------------------------------------------------------------
# TCTC model
# ---------------------------------------------------------------------------


def test_tctc_matches_exact_when_distances_are_coarse():
    # all pairwise distance differences exceed alpha_h: no collisions possible
    coords = np.linspace(0.0, 0.9, 10)
    u = make_line_universe(coords)
    params = TctcParams(alpha_l=0.02, alpha_h=0.04)
    arb = TctcArbiter(u, params, seed=0)
    r = u.element_at(0)
    vm, collisions = tctc_ordering_to_submetric(arb, u.elements, r)
    assert not collisions
    d = u.distances_from_id(r.id)
    for eid, v in vm.values.items():
        assert abs(v - d[u.index_of(eid)]) <= params.alpha_h + 1e-12


def test_tctc_full_collapse_single_real_query():
    coords = 0.5 + np.linspace(0, 0.004, 12)   # all within alpha_l of each other
    u = make_line_universe(coords)
    params = TctcParams(alpha_l=0.02, alpha_h=0.04)
    arb = TctcArbiter(u, params, seed=0)
    r = u.element_at(0)
    vm, collisions = tctc_ordering_to_submetric(arb, u.elements, r)
    assert len(collisions) == len(coords) - 1
    assert arb.ledger.real_count == 1
    assert len(set(vm.values.values())) == 1


@pytest.mark.parametrize("policy", ["always-answer", "always-tctc"])
def test_tctc_two_sided_error_and_overestimate(policy):
    u = gen_uniform_square(512, 1, seed=14)
    params = TctcParams(alpha_l=0.02, alpha_h=0.04, gray_policy=policy,
                        noise_model="adversarial-sign", noise_eta=0.036)
    arb = TctcArbiter(u, params, seed=14)
    r = u.element_at(0)
    vm, collisions = tctc_ordering_to_submetric(arb, u.elements, r)
    d = u.distances_from_id(r.id)
    errs = [abs(vm.values[eid] - d[u.index_of(eid)]) for eid in vm.values]
    assert max(errs) <= 2 * params.alpha_h + 1e-12
    assert count_strict_overestimates(rep_submetric(vm), u, 4 * params.alpha_h) == 0
    assert arb.ledger.real_count <= 8 / params.alpha_l
    assert arb.ledger.triplet_count <= 8 * len(u.ids) * np.ceil(np.log2(1 / params.alpha_l))
    # anchors must really be indistinguishable from their member
    for nc in collisions:
        assert abs(d[u.index_of(nc.member)] - d[u.index_of(nc.anchor)]) < params.alpha_h


def test_tctc_merge_single_rep_equals_single_pipeline():
    u = gen_uniform_square(128, 1, seed=15)
    params = TctcParams(alpha_l=0.02, alpha_h=0.04)
    r = u.element_at(0)
    arb1 = TctcArbiter(u, params, seed=1)
    vm_single, _ = tctc_ordering_to_submetric(arb1, u.elements, r)
    arb2 = TctcArbiter(u, params, seed=1)
    maps, _ = tctc_merge_orderings(arb2, u.elements, [r])
    assert maps[0].values == vm_single.values


def test_tctc_merge_multi_rep_bounds():
    u = gen_uniform_square(256, 1, seed=16)
    params = TctcParams(alpha_l=0.02, alpha_h=0.04)
    reps = [u.element_at(i) for i in (0, 60, 128, 200)]
    arb = TctcArbiter(u, params, seed=2)
    maps, _ = tctc_merge_orderings(arb, u.elements, reps)
    merged = merge([rep_submetric(m) for m in maps])
    assert count_strict_overestimates(merged, u, 4 * params.alpha_h) == 0
    for vm in maps:
        d = u.distances_from_id(vm.representative)
        assert max(abs(vm.values[eid] - d[u.index_of(eid)]) for eid in vm.values) \
            <= 2 * params.alpha_h + 1e-12


def test_tctc_real_count_independent_of_n():
    params = TctcParams(alpha_l=0.02, alpha_h=0.04)
    counts = []
    for n in (256, 1024):
        u = gen_uniform_square(n, 1, seed=20)
        arb = TctcArbiter(u, params, seed=3)
        reps = [u.element_at(i) for i in (0, n // 2)]
        tctc_merge_orderings(arb, u.elements, reps)
        counts.append(arb.ledger.real_count)
    assert counts[1] <= counts[0] * 1.2


# ---------------------------------------------------------------------------
# Threshold labels
# ---------------------------------------------------------------------------


def test_generate_labels_no_ambiguity_no_discards():
    # every element at least 2*alpha_h away from every threshold
    coords = np.array([0.09, 0.10, 0.11, 0.29, 0.30, 0.31, 0.49, 0.50, 0.51] * 2)
    u = make_line_universe(np.concatenate([[0.0], coords]))
    params = TctcParams(alpha_l=0.005, alpha_h=0.01)
    arb = TctcArbiter(u, params, seed=0)
    r = u.element_at(0)
    sample = u.elements[1:]
    thresholds = [0.0, 0.2, 0.4, 0.6]
    labels = generate_labels(arb, sample, [r], thresholds, m_hat=len(sample) // 3)
    for t in thresholds:
        assert len(labels[(r.id, t)]) == len(sample)


@pytest.mark.parametrize("policy", ["always-answer", "always-tctc"])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_generate_labels_retained_entries_are_correct(policy, seed):
    u = gen_uniform_square(120, 1, seed=seed)
    params = TctcParams(alpha_l=0.02, alpha_h=0.04, gray_policy=policy,
                        noise_model="adversarial-sign", noise_eta=0.036)
    arb = TctcArbiter(u, params, seed=seed)
    reps = [u.element_at(0), u.element_at(60)]
    thresholds = [0.0, 0.2, 0.4, 0.6, 0.8]
    labels = generate_labels(arb, u.elements, reps, thresholds, m_hat=40)
    for (rep_id, t), sample in labels.items():
        rep = u.element(rep_id)
        for eid, lab in sample.entries:
            assert lab == threshold_fn(u, rep, t, u.element(eid))
    # at most one under-supplied threshold per representative
    for rep in reps:
        low = [t for t in thresholds if len(labels[(rep.id, t)]) < 40]
        assert len(low) <= 1


def test_generate_labels_adversarial_band_starves_one_threshold():
    m_hat = 60
    t_target = 0.4
    # 125 elements exactly on the target threshold (always discarded there),
    # 55 elements in zones outside every threshold's discard band
    coords = [t_target] * 125 + [0.09, 0.29, 0.49, 0.69, 0.89] * 11
    u = make_line_universe(np.concatenate([[0.0], coords]))
    params = TctcParams(alpha_l=0.02, alpha_h=0.04)
    arb = TctcArbiter(u, params, seed=0)
    r = u.element_at(0)
    thresholds = [0.0, 0.2, 0.4, 0.6, 0.8]
    labels = generate_labels(arb, u.elements[1:], [r], thresholds, m_hat=m_hat)
    starved = [t for t in thresholds if len(labels[(r.id, t)]) < m_hat]
    assert starved == [t_target]
    for t in thresholds:
        if t != t_target:
            assert len(labels[(r.id, t)]) >= 2 * m_hat


def test_generate_labels_rejects_tight_thresholds(square40):
    params = TctcParams(alpha_l=0.02, alpha_h=0.04)
    arb = TctcArbiter(square40, params, seed=0)
    with pytest.raises(ThresholdSpacingError):
        generate_labels(arb, square40.elements, [square40.element_at(0)],
                        [0.0, 0.05], m_hat=5)


def test_exact_threshold_labels_match_truth(square40):
    arb = ExactArbiter(square40)
    reps = [square40.element_at(0), square40.element_at(9)]
    thresholds = [0.0, 0.25, 0.5, 0.75]
    labels = exact_threshold_labels(arb, square40.elements, reps, thresholds)
    for (rep_id, t), sample in labels.items():
        rep = square40.element(rep_id)
        assert len(sample.entries) == square40.size
        for eid, lab in sample.entries:
            assert lab == threshold_fn(square40, rep, t, square40.element(eid))
