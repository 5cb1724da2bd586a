"""Elicitation engines: comparator-sorted orderings, range-splitting distance
labeling, multi-representative merged labeling, and the TCTC analogues with
near-collision tracking and unambiguous threshold label generation.

Exact model
    * sort a sample by distance from a representative using triplet queries
      as a comparator (N log N triplets),
    * label the ordering with real queries by recursively splitting it into
      ranges whose endpoint distances differ by at most alpha
      (max{1/alpha, log N} reals up to a constant),
    * or merge several orderings into one list of (element, representative)
      pairs with quad queries and label the merged list in one split pass.

TCTC model
    * binary insertion stops early when the arbiter declares a comparison too
      close to call; the colliding element is anchored to the list member it
      collided with and inherits its label, so the distinguishable list stays
      within ~1/alpha_l entries and real-query counts become constant in N.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

from fairmetric.arbiter import TCTC
from fairmetric.submetric import ValueMap
from fairmetric.universe import TIE_TOL, Element


class InconsistentOrderingError(RuntimeError):
    """Real-query answers decreased along a supposedly sorted ordering."""


class ThresholdSpacingError(ValueError):
    """Adjacent thresholds closer than the TCTC ambiguity band allows."""


@dataclass
class Ordering:
    """Elements sorted by nondecreasing distance to one representative."""

    representative: str
    items: list[str]
    elements: list[Element] = field(repr=False, default_factory=list)
    rep_element: Element | None = field(repr=False, default=None)


@dataclass
class PairOrdering:
    """(element, representative) pairs sorted by the pair's own distance."""

    items: list[tuple[str, str]]
    pairs: list[tuple[Element, Element]] = field(repr=False, default_factory=list)


@dataclass
class NearCollision:
    """A newcomer declared indistinguishable from an anchor already placed."""

    member: str
    anchor: str
    member_rep: str | None = None
    anchor_rep: str | None = None


@dataclass
class LabeledThresholdSample:
    threshold: float
    representative: str
    entries: list[tuple[str, int]]

    def __len__(self) -> int:
        return len(self.entries)


# ---------------------------------------------------------------------------
# Binary insertion with a query comparator
# ---------------------------------------------------------------------------


def _binary_insert(items: list, x, goes_left: Callable) -> None:
    # goes_left(x, pivot) costs exactly one relative query
    lo, hi = 0, len(items)
    while lo < hi:
        mid = (lo + hi) // 2
        if goes_left(x, items[mid]):
            hi = mid
        else:
            lo = mid + 1
    items.insert(lo, x)


def _binary_insert_tctc(items: list, x, compare: Callable, one_goes_left: bool):
    """Insert x or return the anchor it collided with (answer TCTC)."""
    lo, hi = 0, len(items)
    while lo < hi:
        mid = (lo + hi) // 2
        c = compare(x, items[mid])
        if c == TCTC:
            return items[mid]
        left = (c == 1) if one_goes_left else (c == 0)
        if left:
            hi = mid
        else:
            lo = mid + 1
    items.insert(lo, x)
    return None


# ---------------------------------------------------------------------------
# Exact model
# ---------------------------------------------------------------------------


def triplet_ordering(arbiter, sample: Sequence[Element], r: Element) -> Ordering:
    """Sort ``sample`` by distance from ``r`` using triplet queries.

    Ties may land in any order (the comparator answers 0 on equality, which
    places equal elements adjacently).  Cost: at most N * ceil(log2 N)
    triplet queries.
    """
    if not sample:
        raise ValueError("sample must be nonempty")
    arbiter.set_phase("triplet-ordering")
    ordered: list[Element] = [sample[0]]
    for x in sample[1:]:
        _binary_insert(ordered, x, lambda a, b: arbiter.o_triplet(r, a, b) == 1)
    return Ordering(representative=r.id, items=[e.id for e in ordered],
                    elements=ordered, rep_element=r)


def _check_monotone(probes: list[tuple[int, float]], what: str) -> None:
    probes = sorted(probes)
    for (p1, v1), (p2, v2) in zip(probes, probes[1:]):
        if v2 < v1 - TIE_TOL:
            raise InconsistentOrderingError(
                f"{what}: answer at position {p2} ({v2:.6f}) is below position {p1} ({v1:.6f})")


def _split_ranges(query: Callable[[int], float], n: int, alpha: float,
                  assign: Callable[[int, int, float], None],
                  check: bool) -> None:
    """Recursive range splitting, iterated in depth-first (left-first) order."""
    probes: list[tuple[int, float]] = []
    stack = [(0, n - 1)]
    while stack:
        lo, hi = stack.pop()
        d_bottom = query(lo)
        d_top = query(hi)
        probes.append((lo, d_bottom))
        probes.append((hi, d_top))
        if d_top - d_bottom <= alpha:
            assign(lo, hi, d_bottom)
        else:
            mid = (lo + hi) // 2
            stack.append((mid + 1, hi))
            stack.append((lo, mid))
    if check:
        _check_monotone(probes, "range splitting")


def ordering_to_submetric(arbiter, ordering: Ordering, alpha: float,
                          check_consistency: bool | None = None) -> ValueMap:
    """Label a representative-consistent ordering at granularity alpha.

    Every element's distance from the representative is rounded down by at
    most alpha (to the real-query answer at the bottom of its range), so the
    induced representative submetric carries additive bound alpha.
    """
    if not (0 < alpha < 1):
        raise ValueError("alpha must lie in (0,1)")
    r = ordering.rep_element
    if r is None:
        raise ValueError("ordering lost its representative element handle")
    if check_consistency is None:
        check_consistency = not getattr(arbiter, "is_tctc", False)
    arbiter.set_phase("range-split")
    elements = ordering.elements
    values: dict[str, float] = {}

    def assign(lo: int, hi: int, val: float) -> None:
        for i in range(lo, hi + 1):
            values[elements[i].id] = val

    _split_ranges(lambda i: arbiter.o_real(r, elements[i]), len(elements), alpha,
                  assign, check_consistency)
    return ValueMap(representative=r.id, values=values, alpha=alpha)


def merge_orderings(arbiter, orderings: Sequence[Ordering], alpha: float,
                    check_consistency: bool | None = None) -> list[ValueMap]:
    """Merge per-representative orderings with quad queries, then label once.

    The merged (element, representative) list is sorted by each pair's own
    distance, so a single range-splitting pass labels all representatives:
    one value map per representative, each with additive bound alpha.
    """
    if not orderings:
        raise ValueError("need at least one ordering")
    if check_consistency is None:
        check_consistency = not getattr(arbiter, "is_tctc", False)
    arbiter.set_phase("quad-merge")

    def goes_left(p, q) -> bool:
        # quad answers 1 when the inserted pair is strictly farther
        return arbiter.o_quad(p[1], p[0], q[1], q[0]) == 0

    sources = [list(o.elements) for o in orderings]
    reps = [o.rep_element for o in orderings]
    if any(r is None for r in reps):
        raise ValueError("ordering lost its representative element handle")
    working: list[tuple[Element, Element, int]] = []
    for k, src in enumerate(sources):
        if src:
            _binary_insert(working, (src.pop(0), reps[k], k),
                           lambda p, q: goes_left(p, q))
    merged: list[tuple[Element, Element]] = []
    while working:
        x, r, k = working.pop(0)
        merged.append((x, r))
        if sources[k]:
            _binary_insert(working, (sources[k].pop(0), reps[k], k),
                           lambda p, q: goes_left(p, q))

    arbiter.set_phase("range-split")
    values: dict[str, dict[str, float]] = {r.id: {} for r in reps}

    def assign(lo: int, hi: int, val: float) -> None:
        for i in range(lo, hi + 1):
            x, r = merged[i]
            values[r.id][x.id] = val

    _split_ranges(lambda i: arbiter.o_real(merged[i][1], merged[i][0]), len(merged),
                  alpha, assign, check_consistency)
    return [ValueMap(representative=r.id, values=values[r.id], alpha=alpha) for r in reps]


# ---------------------------------------------------------------------------
# TCTC model
# ---------------------------------------------------------------------------


def tctc_ordering_to_submetric(arbiter, sample: Sequence[Element], r: Element
                               ) -> tuple[ValueMap, list[NearCollision]]:
    """TCTC single-representative elicitation.

    Elements indistinguishable from an already-placed element never enter the
    distinguishable list; they inherit its (noisy) label instead.  Labels are
    two-sided within 2*alpha_h of the truth, so the representative submetric
    carries additive bound 4*alpha_h.  Real queries are bounded by the
    distinguishable-list size, about 1/alpha_l.
    """
    if not sample:
        raise ValueError("sample must be nonempty")
    params = arbiter.params
    arbiter.set_phase("triplet-ordering")
    ordered: list[Element] = [sample[0]]
    collisions: list[tuple[Element, Element]] = []
    for x in sample[1:]:
        anchor = _binary_insert_tctc(
            ordered, x, lambda a, b: arbiter.o_triplet(r, a, b), one_goes_left=True)
        if anchor is not None:
            collisions.append((x, anchor))

    arbiter.set_phase("tctc-label")
    values: dict[str, float] = {}
    for x in ordered:
        values[x.id] = arbiter.o_real(r, x)
    for member, anchor in collisions:
        values[member.id] = values[anchor.id]
    vm = ValueMap(representative=r.id, values=values, alpha=4.0 * params.alpha_h)
    return vm, [NearCollision(member=m.id, anchor=a.id) for m, a in collisions]


def _tctc_pair_labels(arbiter, sample: Sequence[Element], reps: Sequence[Element]
                      ) -> tuple[dict[str, dict[str, float]], PairOrdering, list[NearCollision]]:
    """Shared TCTC quad-merge labeling over all (element, representative) pairs."""
    arbiter.set_phase("quad-merge")

    def compare(p, q) -> int:
        # 1 when the inserted pair is strictly farther, 0 when not, TCTC when close
        return arbiter.o_quad(p[1], p[0], q[1], q[0])

    working: list[tuple[Element, Element]] = []
    collisions: list[tuple[tuple[Element, Element], tuple[Element, Element]]] = []
    for r in reps:
        for x in sample:
            anchor = _binary_insert_tctc(working, (x, r), compare, one_goes_left=False)
            if anchor is not None:
                collisions.append(((x, r), anchor))

    arbiter.set_phase("tctc-label")
    values: dict[str, dict[str, float]] = {r.id: {} for r in reps}
    for x, r in working:
        values[r.id][x.id] = arbiter.o_real(r, x)
    for (y, r1), (x, r2) in collisions:
        values[r1.id][y.id] = values[r2.id][x.id]
    order = PairOrdering(items=[(x.id, r.id) for x, r in working], pairs=list(working))
    near = [NearCollision(member=m[0].id, member_rep=m[1].id,
                          anchor=a[0].id, anchor_rep=a[1].id) for m, a in collisions]
    return values, order, near


def tctc_merge_orderings(arbiter, sample: Sequence[Element], reps: Sequence[Element]
                         ) -> tuple[list[ValueMap], list[NearCollision]]:
    """Multi-representative TCTC elicitation via quad queries.

    Real-query count is bounded by the distinguishable pair-list size (about
    1/alpha_l) independently of N and |R|; every per-representative label is
    within 2*alpha_h of the truth.
    """
    if not sample or not reps:
        raise ValueError("sample and reps must be nonempty")
    params = arbiter.params
    values, _, near = _tctc_pair_labels(arbiter, sample, reps)
    maps = [ValueMap(representative=r.id, values=values[r.id], alpha=4.0 * params.alpha_h)
            for r in reps]
    return maps, near


def generate_labels(arbiter, sample: Sequence[Element], reps: Sequence[Element],
                    thresholds: Sequence[float], m_hat: int,
                    ) -> dict[tuple[str, float], LabeledThresholdSample]:
    """Unambiguous threshold labels from TCTC elicitation.

    Entries whose elicited distance lands within 2*alpha_h of a threshold are
    discarded for that threshold; every retained label equals the true
    threshold-function value.  With |sample| = 3*m_hat and adjacent thresholds
    more than 2*alpha_h apart, at most one threshold per representative ends
    up with fewer than m_hat labels.
    """
    params = arbiter.params
    band = 2.0 * params.alpha_h
    ts = sorted(thresholds)
    gaps = [b - a for a, b in zip(ts, ts[1:])]
    if gaps and min(gaps) <= band:
        raise ThresholdSpacingError(
            f"adjacent thresholds must be more than 2*alpha_h={band} apart (min gap {min(gaps):.4f})")
    if len(sample) < 3 * m_hat:
        raise ValueError(f"need |sample| >= 3*m_hat = {3 * m_hat}, got {len(sample)}")
    values, _, _ = _tctc_pair_labels(arbiter, sample, reps)
    out: dict[tuple[str, float], LabeledThresholdSample] = {}
    for r in reps:
        f = values[r.id]
        for t in ts:
            entries = []
            for x in sample:
                fx = f[x.id]
                if fx < t - band:
                    entries.append((x.id, 1))
                elif fx > t + band:
                    entries.append((x.id, 0))
            out[(r.id, t)] = LabeledThresholdSample(threshold=t, representative=r.id,
                                                    entries=entries)
    return out


# ---------------------------------------------------------------------------
# Exact-model threshold labels
# ---------------------------------------------------------------------------


def exact_threshold_labels(arbiter, sample: Sequence[Element], reps: Sequence[Element],
                           thresholds: Sequence[float],
                           ) -> dict[tuple[str, float], LabeledThresholdSample]:
    """Exact threshold-function labels via ordering plus prefix search.

    One triplet-sorted ordering per representative serves every threshold;
    each threshold then needs only ceil(log2 N) real queries to locate the
    boundary between elements inside and outside the ball.  All labels equal
    the true threshold-function values.
    """
    out: dict[tuple[str, float], LabeledThresholdSample] = {}
    for r in reps:
        ordering = triplet_ordering(arbiter, sample, r)
        arbiter.set_phase("threshold-labels")
        els = ordering.elements
        for t in sorted(thresholds):
            lo, hi = 0, len(els)
            while lo < hi:
                mid = (lo + hi) // 2
                if arbiter.o_real(r, els[mid]) <= t + TIE_TOL:
                    lo = mid + 1
                else:
                    hi = mid
            entries = [(e.id, 1) for e in els[:lo]] + [(e.id, 0) for e in els[lo:]]
            out[(r.id, t)] = LabeledThresholdSample(threshold=t, representative=r.id,
                                                    entries=entries)
    return out
