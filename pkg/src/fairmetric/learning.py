"""Threshold-vote learning: turn per-threshold binary hypotheses into
submetric hypotheses that generalize to unseen elements.

The pipeline trains one binary hypothesis per (representative, threshold),
votes them into an estimated rounded-down distance per element, takes
differences per representative, and maxmerges across representatives.  Error
and failure budgets split exactly as eps_t = eps_R / (2 |R| |T|) and
delta_t = delta_R / (|R| |T|) with delta_R = delta / 2 (the other half of
delta pays for the random representative draw).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from fairmetric.elicitation import (
    LabeledThresholdSample,
    ThresholdSpacingError,
    exact_threshold_labels,
    generate_labels,
)
from fairmetric.representatives import rep_set_size
from fairmetric.rng import derive_rng
from fairmetric.submetric import Submetric
from fairmetric.universe import Element, InvalidParameterError, Universe


class MisalignedInputsError(ValueError):
    """Hypotheses and thresholds differ in length or order."""


class LearnerFailure(RuntimeError):
    """A threshold learner declined to produce a hypothesis."""

    def __init__(self, message: str, threshold: float | None = None, rep: str | None = None):
        super().__init__(message)
        self.threshold = threshold
        self.rep = rep


@dataclass(frozen=True)
class ThresholdSet:
    """Strictly increasing thresholds in [0,1], always containing 0."""

    thresholds: tuple[float, ...]

    def __post_init__(self):
        ts = self.thresholds
        if not ts or abs(ts[0]) > 1e-12:
            raise InvalidParameterError("threshold set must start at 0")
        if any(b - a <= 0 for a, b in zip(ts, ts[1:])) or ts[-1] > 1 + 1e-12:
            raise InvalidParameterError("thresholds must be strictly increasing within [0,1]")

    def __len__(self) -> int:
        return len(self.thresholds)

    def __iter__(self):
        return iter(self.thresholds)

    @property
    def alpha_t(self) -> float:
        if len(self.thresholds) < 2:
            return 0.0
        return max(b - a for a, b in zip(self.thresholds, self.thresholds[1:]))

    @property
    def min_gap(self) -> float:
        if len(self.thresholds) < 2:
            return 1.0
        return min(b - a for a, b in zip(self.thresholds, self.thresholds[1:]))

    def require_tctc_spacing(self, alpha_h: float) -> None:
        if self.min_gap <= 2.0 * alpha_h:
            raise ThresholdSpacingError(
                f"TCTC mode needs min threshold gap > 2*alpha_h={2 * alpha_h}, got {self.min_gap}")

    @classmethod
    def even_grid(cls, granularity: float) -> "ThresholdSet":
        """0, g, 2g, ... (ending at 1 when 1/g is integral), so alpha_t == g."""
        if not (0 < granularity <= 1):
            raise InvalidParameterError("granularity must lie in (0,1]")
        k = int(math.floor(1.0 / granularity + 1e-9))
        return cls(tuple(round(i * granularity, 12) for i in range(k + 1) if i * granularity <= 1 + 1e-12))


def threshold_fn(universe: Universe, r: Element, t: float, u: Element) -> int:
    """Ground-truth threshold indicator: 1 iff D(r,u) <= t (harness side)."""
    if not (0 <= t <= 1):
        raise InvalidParameterError("t must lie in [0,1]")
    return 1 if universe.distance(r, u) <= t + 1e-9 else 0


# ---------------------------------------------------------------------------
# Hypotheses
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Provenance:
    rep: str
    threshold: float
    learner: str
    training_size: int
    eps_t: float = float("nan")
    delta_t: float = float("nan")


@dataclass(frozen=True)
class BallHypothesis:
    """Accepts elements whose feature distance to the center is <= radius."""

    center: tuple[float, ...]
    radius: float
    provenance: Provenance | None = None

    def predict(self, u: Element) -> int:
        d = math.sqrt(sum((a - b) ** 2 for a, b in zip(u.features, self.center)))
        return 1 if d <= self.radius else 0

    def to_json_dict(self) -> dict:
        return {"kind": "ball", "params": {"center": list(self.center), "radius": self.radius}}


@dataclass(frozen=True)
class OracleHypothesis:
    """Truth-backed threshold indicator; the perfect-hypothesis harness case."""

    universe: Universe
    rep: Element
    threshold: float
    provenance: Provenance | None = None

    def predict(self, u: Element) -> int:
        return threshold_fn(self.universe, self.rep, self.threshold, u)

    def to_json_dict(self) -> dict:
        return {"kind": "oracle", "params": {"rep": self.rep.id, "t": self.threshold}}


def linear_vote(ts: ThresholdSet | Sequence[float], hyps: Sequence, x: Element) -> float:
    """Vote the per-threshold hypotheses into a rounded-down distance value.

    The element's estimated threshold index is the net count of hypotheses
    voting "beyond this threshold".  On internally consistent hypothesis
    patterns this equals the agreement-maximizing threshold with ties broken
    toward the smaller value; under any single flipped hypothesis the output
    moves by at most one threshold step.  When every hypothesis is correct the
    result is the true distance rounded down to the threshold grid (distances
    landing exactly on a positive threshold resolve one cell down).
    """
    values = list(ts.thresholds if isinstance(ts, ThresholdSet) else ts)
    if len(values) != len(hyps):
        raise MisalignedInputsError(f"{len(values)} thresholds vs {len(hyps)} hypotheses")
    zeros = sum(1 for h in hyps if h.predict(x) == 0)
    return values[max(zeros, 1) - 1]


# ---------------------------------------------------------------------------
# Ball threshold learner (Assumption-1 witness for Euclidean-kind universes)
# ---------------------------------------------------------------------------


def m_hat(eps_t: float, delta_t: float) -> int:
    """Per-learner sample size: the one-parameter bound times a safety factor."""
    if not (0 < eps_t <= 1) or not (0 < delta_t <= 1):
        raise InvalidParameterError("eps_t and delta_t must lie in (0,1]")
    return 4 * math.ceil((1.0 / eps_t) * math.log(2.0 / delta_t))


class BallThresholdLearner:
    """Empirical-risk ball fit around a representative's feature vector.

    Sweeps the sorted sample radii for the cut minimizing misclassification;
    ties break toward the smaller radius.  All-positive label sets accept
    everything (infinite radius); all-negative sets accept nothing.
    """

    kind = "ball"

    def __init__(self, rep: Element, elements: Mapping[str, Element]):
        self.rep = rep
        self.elements = elements

    def sample_size(self, eps_t: float, delta_t: float) -> int:
        return m_hat(eps_t, delta_t)

    def train(self, labeled: LabeledThresholdSample, eps_t: float = 1.0,
              delta_t: float = 1.0) -> BallHypothesis:
        if not labeled.entries:
            raise LearnerFailure("no labeled entries", threshold=labeled.threshold,
                                 rep=labeled.representative)
        center = np.asarray(self.rep.features, dtype=float)
        radii = np.array([
            math.sqrt(sum((a - b) ** 2 for a, b in zip(self.elements[eid].features, center)))
            for eid, _ in labeled.entries])
        labels = np.array([lab for _, lab in labeled.entries])
        prov = Provenance(rep=labeled.representative, threshold=labeled.threshold,
                          learner=self.kind, training_size=len(labels),
                          eps_t=eps_t, delta_t=delta_t)
        if labels.all():
            return BallHypothesis(tuple(center), float("inf"), prov)
        order = np.argsort(radii, kind="stable")
        radii, labels = radii[order], labels[order]
        ones_before = np.concatenate([[0], np.cumsum(labels)])
        total_ones = int(ones_before[-1])
        # candidate cuts: before everything, then after each run of equal radii
        cuts = [0] + [i + 1 for i in range(len(radii))
                      if i + 1 == len(radii) or radii[i + 1] > radii[i]]
        best_cut, best_err = 0, None
        for cut in cuts:
            err = (total_ones - ones_before[cut]) + (cut - ones_before[cut])
            if best_err is None or err < best_err:
                best_cut, best_err = cut, err
        radius = -1.0 if best_cut == 0 else float(radii[best_cut - 1])
        return BallHypothesis(tuple(center), radius, prov)


class OracleLearner:
    """Ignores the labels and returns the truth-backed hypothesis (harness)."""

    kind = "oracle"

    def __init__(self, universe: Universe, rep: Element, threshold: float):
        self.universe = universe
        self.rep = rep
        self.threshold = threshold

    def sample_size(self, eps_t: float, delta_t: float) -> int:
        return 1

    def train(self, labeled: LabeledThresholdSample, eps_t: float = 1.0,
              delta_t: float = 1.0) -> OracleHypothesis:
        prov = Provenance(rep=self.rep.id, threshold=self.threshold, learner=self.kind,
                          training_size=len(labeled.entries), eps_t=eps_t, delta_t=delta_t)
        return OracleHypothesis(self.universe, self.rep, self.threshold, prov)


# ---------------------------------------------------------------------------
# Combiners
# ---------------------------------------------------------------------------


@dataclass
class RepHypothesis:
    """Votes for one representative: h_r(x,y) = |vote(x) - vote(y)|."""

    rep_id: str
    thresholds: tuple[float, ...]
    hypotheses: list
    rep_features: tuple[float, ...] | None = None
    eps_r: float = float("nan")
    delta_r: float = float("nan")

    def vote(self, x: Element) -> float:
        return linear_vote(self.thresholds, self.hypotheses, x)

    def evaluate(self, u: Element, v: Element) -> float:
        return abs(self.vote(u) - self.vote(v))

    def _ball_arrays(self):
        if self.rep_features is None or not all(isinstance(h, BallHypothesis) for h in self.hypotheses):
            return None
        return (np.asarray(self.rep_features, dtype=float),
                np.array([h.radius for h in self.hypotheses]))

    def vote_batch(self, features: np.ndarray) -> np.ndarray:
        fast = self._ball_arrays()
        ts = np.asarray(self.thresholds)
        if fast is None:
            raise TypeError("feature-batch voting needs ball hypotheses; "
                            "use vote_elements for other hypothesis kinds")
        center, radii = fast
        dists = np.sqrt(np.sum((features - center[None, :]) ** 2, axis=-1))
        zeros = np.sum(dists[:, None] > radii[None, :], axis=1)
        return ts[np.maximum(zeros, 1) - 1]

    def vote_elements(self, elements: Sequence[Element]) -> np.ndarray:
        if self._ball_arrays() is not None:
            return self.vote_batch(np.array([e.features for e in elements]))
        return np.array([self.vote(e) for e in elements])


@dataclass
class SubmetricHypothesis(Submetric):
    """maxmerge over per-representative vote hypotheses.

    ``alpha`` is the nominal additive bound that holds except on the
    eps-bounded error mass (alpha_T exact, 4*alpha_T TCTC); it is not a
    certified pointwise bound like the fixed-sample submetrics carry.
    """

    reps: list[RepHypothesis] = field(default_factory=list)
    alpha: float = 0.0
    meta: dict = field(default_factory=dict)

    def evaluate(self, u: Element, v: Element) -> float:
        return max(r.evaluate(u, v) for r in self.reps)

    def pair_values(self, feats_u: np.ndarray, feats_v: np.ndarray) -> np.ndarray:
        acc = None
        for r in self.reps:
            vu = r.vote_batch(feats_u)
            vv = r.vote_batch(feats_v)
            d = np.abs(vu - vv)
            acc = d if acc is None else np.maximum(acc, d)
        return acc

    def pairwise(self, universe: Universe) -> np.ndarray:
        votes = np.stack([r.vote_elements(universe.elements) for r in self.reps])
        return np.abs(votes[:, :, None] - votes[:, None, :]).max(axis=0)

    def to_json_dict(self) -> dict:
        return {
            "reps": [{
                "rep_id": r.rep_id,
                "rep_features": list(r.rep_features) if r.rep_features is not None else None,
                "thresholds": list(r.thresholds),
                "hypotheses": [h.to_json_dict() for h in r.hypotheses],
            } for r in self.reps],
            "alpha": self.alpha,
            "meta": self.meta,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "SubmetricHypothesis":
        doc = json.loads(text)
        reps = []
        for rd in doc["reps"]:
            hyps = []
            for hd in rd["hypotheses"]:
                if hd["kind"] != "ball":
                    raise ValueError("only ball hypotheses round-trip through JSON")
                hyps.append(BallHypothesis(tuple(hd["params"]["center"]), hd["params"]["radius"]))
            reps.append(RepHypothesis(rep_id=rd["rep_id"], thresholds=tuple(rd["thresholds"]),
                                      hypotheses=hyps,
                                      rep_features=tuple(rd["rep_features"]) if rd.get("rep_features") else None))
        return cls(reps=reps, alpha=doc["alpha"], meta=doc.get("meta", {}))


def remap_thresholds(hyp: SubmetricHypothesis,
                     mapping: Mapping[float, float]) -> SubmetricHypothesis:
    """Optional post-processing: re-map vote output values onto new thresholds.

    The binary hypotheses are untouched; only the values the vote emits move,
    which can shrink the maximum adjacent gap (and with it the nominal
    additive bound).  The cost is extra contraction: distances between
    remapped cells shrink by the same amount, so nontriviality guarantees
    weaken.  Not applied by default.
    """
    reps = []
    for rh in hyp.reps:
        new_ts = tuple(float(mapping.get(t, t)) for t in rh.thresholds)
        if any(b - a <= 0 for a, b in zip(new_ts, new_ts[1:])):
            raise InvalidParameterError("remapped thresholds must stay strictly increasing")
        reps.append(RepHypothesis(rep_id=rh.rep_id, thresholds=new_ts,
                                  hypotheses=rh.hypotheses, rep_features=rh.rep_features,
                                  eps_r=rh.eps_r, delta_r=rh.delta_r))
    gaps = [b - a for rh in reps for a, b in zip(rh.thresholds, rh.thresholds[1:])]
    new_alpha = max(gaps) if gaps else 0.0
    if hyp.meta.get("mode") == "tctc":
        new_alpha *= 4.0
    meta = dict(hyp.meta)
    meta["remapped"] = True
    return SubmetricHypothesis(reps=reps, alpha=new_alpha, meta=meta)


def threshold_combiner(ts: ThresholdSet | Sequence[float],
                       learners: Mapping[float, object],
                       eps_r: float, delta_r: float,
                       labels: Mapping[float, LabeledThresholdSample],
                       rep: Element) -> RepHypothesis:
    """Train one hypothesis per threshold and pack them into a vote.

    Each learner receives eps_r/(2|T|) and delta_r/|T|; a failing learner
    surfaces as LearnerFailure naming its threshold.
    """
    values = tuple(ts.thresholds if isinstance(ts, ThresholdSet) else ts)
    n = len(values)
    hyps = []
    for t in values:
        try:
            hyps.append(learners[t].train(labels[t], eps_t=eps_r / (2 * n), delta_t=delta_r / n))
        except LearnerFailure:
            raise
        except Exception as exc:
            raise LearnerFailure(f"learner for threshold {t} failed: {exc}",
                                 threshold=t, rep=rep.id) from exc
    return RepHypothesis(rep_id=rep.id, thresholds=values, hypotheses=hyps,
                         rep_features=rep.features, eps_r=eps_r, delta_r=delta_r)


def combiner(rep_trainers: Sequence[Callable[[float, float], RepHypothesis]],
             eps_R: float, delta_R: float, alpha: float = 0.0,
             meta: dict | None = None) -> SubmetricHypothesis:
    """maxmerge the per-representative hypotheses, splitting budgets evenly."""
    if not rep_trainers:
        raise InvalidParameterError("need at least one representative trainer")
    n = len(rep_trainers)
    reps = [trainer(eps_R / n, delta_R / n) for trainer in rep_trainers]
    return SubmetricHypothesis(reps=reps, alpha=alpha, meta=dict(meta or {}))


# ---------------------------------------------------------------------------
# End-to-end learners
# ---------------------------------------------------------------------------


def _unique_by_id(elements: Sequence[Element]) -> list[Element]:
    seen: dict[str, Element] = {}
    for e in elements:
        seen.setdefault(e.id, e)
    return list(seen.values())


def ball_factory(sample_index: Mapping[str, Element]):
    def make(rep: Element, t: float) -> BallThresholdLearner:
        return BallThresholdLearner(rep, sample_index)
    return make


def oracle_factory(universe: Universe):
    def make(rep: Element, t: float) -> OracleLearner:
        return OracleLearner(universe, rep, t)
    return make


def submetric_learner(arbiter, universe: Universe, eps: float, delta: float, b: float,
                      ts: ThresholdSet, learner_factory=None, seed: int = 0,
                      max_sample: int | None = None) -> SubmetricHypothesis:
    """Exact-model end-to-end learner.

    Draws |R| = ceil((1/b) ln(2/(b delta))) representatives, elicits exact
    threshold labels for one shared training sample, trains every threshold
    learner at eps_t = eps/(2|R||T|), delta_t = delta/(2|R||T|), and
    maxmerges the per-representative votes.  ``max_sample`` caps the
    theory-prescribed training-sample size at desk scale.
    """
    if not (0 < eps <= 1) or not (0 < delta <= 1):
        raise InvalidParameterError("eps and delta must lie in (0,1]")
    n_reps = rep_set_size(b, delta, budget_split=True)
    reps = universe.sample_elements(n_reps, derive_rng(seed, "learner-reps"))
    unique_reps = _unique_by_id(reps)
    eps_R, delta_R = eps, delta / 2.0
    eps_r, delta_r = eps_R / n_reps, delta_R / n_reps
    eps_t, delta_t = eps_r / (2 * len(ts)), delta_r / len(ts)

    make = learner_factory or ball_factory({})
    probe = make(unique_reps[0], ts.thresholds[0])
    want = probe.sample_size(eps_t, delta_t)
    m = want if max_sample is None else min(want, max_sample)
    sample = universe.sample_elements(m, derive_rng(seed, "learner-sample"))
    sample_index = {e.id: e for e in sample}
    if learner_factory is None:
        make = ball_factory(sample_index)

    labels = exact_threshold_labels(arbiter, sample, unique_reps, list(ts))

    def trainer_for(rep: Element):
        def train(eps_r_: float, delta_r_: float) -> RepHypothesis:
            learners = {t: make(rep, t) for t in ts}
            lab = {t: labels[(rep.id, t)] for t in ts}
            return threshold_combiner(ts, learners, eps_r_, delta_r_, lab, rep)
        return train

    hyp = combiner([trainer_for(r) for r in reps], eps_R, delta_R, alpha=ts.alpha_t,
                   meta={"mode": "exact", "b": b, "eps": eps, "delta": delta,
                         "n_reps": n_reps, "eps_t": eps_t, "delta_t": delta_t,
                         "m_requested": want, "m_used": m, "alpha_t": ts.alpha_t})
    return hyp


def tctc_submetric_learner(arbiter, universe: Universe, eps: float, delta: float, b: float,
                           ts: ThresholdSet, learner_factory=None, seed: int = 0,
                           max_sample: int | None = None) -> SubmetricHypothesis:
    """TCTC end-to-end learner with ambiguous-label discarding.

    Labels come from the TCTC quad-merge pass; per representative, thresholds
    left with fewer than m_hat retained labels (at most one under the spacing
    assumption) are dropped from that representative's vote, widening its
    effective rounding step.  Nominal additive bound: 4 * alpha_T.
    """
    if not (0 < eps <= 1) or not (0 < delta <= 1):
        raise InvalidParameterError("eps and delta must lie in (0,1]")
    ts.require_tctc_spacing(arbiter.params.alpha_h)
    n_reps = rep_set_size(b, delta, budget_split=True)
    reps = universe.sample_elements(n_reps, derive_rng(seed, "learner-reps"))
    unique_reps = _unique_by_id(reps)
    eps_R, delta_R = eps, delta / 2.0
    eps_r, delta_r = eps_R / n_reps, delta_R / n_reps
    eps_t, delta_t = eps_r / (2 * len(ts)), delta_r / len(ts)

    make = learner_factory or ball_factory({})
    probe = make(unique_reps[0], ts.thresholds[0])
    want = probe.sample_size(eps_t, delta_t)
    m = want if max_sample is None else min(want, max_sample)
    sample = universe.sample_elements(3 * m, derive_rng(seed, "learner-sample"))
    sample_index = {e.id: e for e in sample}
    if learner_factory is None:
        make = ball_factory(sample_index)

    labels = generate_labels(arbiter, sample, unique_reps, list(ts), m)

    def trainer_for(rep: Element):
        def train(eps_r_: float, delta_r_: float) -> RepHypothesis:
            kept = tuple(t for t in ts if len(labels[(rep.id, t)]) >= m)
            if not kept:
                raise LearnerFailure("every threshold under-supplied", rep=rep.id)
            learners = {t: make(rep, t) for t in kept}
            lab = {t: labels[(rep.id, t)] for t in kept}
            return threshold_combiner(kept, learners, eps_r_, delta_r_, lab, rep)
        return train

    hyp = combiner([trainer_for(r) for r in reps], eps_R, delta_R, alpha=4.0 * ts.alpha_t,
                   meta={"mode": "tctc", "b": b, "eps": eps, "delta": delta,
                         "n_reps": n_reps, "eps_t": eps_t, "delta_t": delta_t,
                         "m_requested": want, "m_used": m, "alpha_t": ts.alpha_t,
                         "alpha_h": arbiter.params.alpha_h, "alpha_l": arbiter.params.alpha_l})
    return hyp
