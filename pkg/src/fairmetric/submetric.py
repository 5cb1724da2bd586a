"""Submetric algebra: representative value maps, merging, postprocessing,
and nontriviality / overestimate measurement.

A submetric is any pairwise function certified never to overestimate the
ground metric by more than its additive bound ``alpha``.  The workhorse form
is the representative submetric |f_r(x) - f_r(y)| built from a per-element
value map; merging takes pointwise maxima and keeps the largest child alpha.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from fairmetric.rng import derive_rng
from fairmetric.universe import Element, Universe

#: Float-dust guard used when counting strict violations.
EVAL_TOL = 1e-9


class UnknownElementError(KeyError):
    """A fixed-sample submetric was evaluated outside its value-map domain."""


class EmptyMergeError(ValueError):
    """maxmerge was called with no child submetrics."""


@dataclass
class ValueMap:
    """Underestimated distances from one representative.

    ``values[x]`` approximates D(representative, x) from below in the exact
    model (two-sided within 2*alpha_h in the TCTC model); ``alpha`` is the
    certified additive bound of the induced representative submetric.
    """

    representative: str
    values: dict[str, float]
    alpha: float

    def value(self, eid: str) -> float:
        try:
            return self.values[eid]
        except KeyError as exc:
            raise UnknownElementError(f"element {eid!r} not covered by value map") from exc


class Submetric:
    """Base class: symmetric nonnegative pairwise evaluation with an alpha bound."""

    alpha: float = 0.0

    def evaluate(self, u: Element, v: Element) -> float:
        raise NotImplementedError

    def __call__(self, u: Element, v: Element) -> float:
        return self.evaluate(u, v)

    def pairwise(self, universe: Universe) -> np.ndarray:
        """Dense evaluation over a universe (measurement harness use)."""
        els = universe.elements
        n = len(els)
        out = np.zeros((n, n))
        for i in range(n):
            out[i, i] = self.evaluate(els[i], els[i])
            for j in range(i + 1, n):
                out[i, j] = out[j, i] = self.evaluate(els[i], els[j])
        return out

    def to_json_dict(self) -> dict:
        raise NotImplementedError


class RepSubmetric(Submetric):
    """Single-representative form: (x, y) -> |f_r(x) - f_r(y)|."""

    def __init__(self, value_map: ValueMap):
        self.value_map = value_map
        self.alpha = float(value_map.alpha)

    def evaluate(self, u: Element, v: Element) -> float:
        return abs(self.value_map.value(u.id) - self.value_map.value(v.id))

    def pairwise(self, universe: Universe) -> np.ndarray:
        f = np.array([self.value_map.value(eid) for eid in universe.ids])
        return np.abs(f[:, None] - f[None, :])

    def to_json_dict(self) -> dict:
        vm = self.value_map
        return {
            "form": "single-rep",
            "alpha": self.alpha,
            "value_maps": [{"rep": vm.representative,
                            "entries": {k: vm.values[k] for k in sorted(vm.values)}}],
        }


class MergedSubmetric(Submetric):
    """Pointwise maximum of child submetrics; alpha is the max child alpha."""

    def __init__(self, children: Sequence[Submetric]):
        if not children:
            raise EmptyMergeError("maxmerge needs at least one submetric")
        self.children = list(children)
        self.alpha = max(c.alpha for c in self.children)

    def evaluate(self, u: Element, v: Element) -> float:
        return max(c.evaluate(u, v) for c in self.children)

    def pairwise(self, universe: Universe) -> np.ndarray:
        acc = self.children[0].pairwise(universe)
        for c in self.children[1:]:
            acc = np.maximum(acc, c.pairwise(universe))
        return acc

    def to_json_dict(self) -> dict:
        maps = []
        for c in self.children:
            maps.extend(c.to_json_dict()["value_maps"])
        return {"form": "merged", "alpha": self.alpha, "value_maps": maps}


class PostprocessedSubmetric(Submetric):
    """max(0, inner(x,y) - inner.alpha): removes the additive error entirely."""

    def __init__(self, inner: Submetric):
        self.inner = inner
        self.shift = float(inner.alpha)
        self.alpha = 0.0

    def evaluate(self, u: Element, v: Element) -> float:
        return max(0.0, self.inner.evaluate(u, v) - self.shift)

    def pairwise(self, universe: Universe) -> np.ndarray:
        return np.maximum(0.0, self.inner.pairwise(universe) - self.shift)

    def to_json_dict(self) -> dict:
        doc = self.inner.to_json_dict()
        return {"form": "postprocessed", "alpha": 0.0, "shift": self.shift,
                "value_maps": doc["value_maps"]}


class CallableSubmetric(Submetric):
    """Adapter for hypothesis-backed or ad-hoc pairwise functions."""

    def __init__(self, fn, alpha: float, label: str = "callable"):
        self._fn = fn
        self.alpha = float(alpha)
        self.label = label

    def evaluate(self, u: Element, v: Element) -> float:
        return float(self._fn(u, v))

    def to_json_dict(self) -> dict:
        return {"form": "hypothesis", "alpha": self.alpha, "label": self.label,
                "value_maps": []}


def rep_submetric(value_map: ValueMap) -> RepSubmetric:
    """Representative submetric induced by a value map."""
    if not value_map.values:
        raise UnknownElementError("value map is empty")
    return RepSubmetric(value_map)


def maxmerge(subs: Sequence[Submetric], x: Element, y: Element) -> float:
    """Pointwise maximum over child submetrics at one pair."""
    if not subs:
        raise EmptyMergeError("maxmerge needs at least one submetric")
    return max(s.evaluate(x, y) for s in subs)


def merge(subs: Sequence[Submetric]) -> MergedSubmetric:
    return MergedSubmetric(subs)


def postprocess_zero(s: Submetric) -> PostprocessedSubmetric:
    """Shift down by alpha and clamp at zero, yielding a 0-submetric."""
    return PostprocessedSubmetric(s)


def submetric_to_json(s: Submetric) -> str:
    return json.dumps(s.to_json_dict(), indent=2)


def submetric_from_json(text: str) -> Submetric:
    doc = json.loads(text)
    maps = [ValueMap(m["rep"], dict(m["entries"]), doc["alpha"]) for m in doc["value_maps"]]
    if doc["form"] == "single-rep":
        return RepSubmetric(maps[0])
    if doc["form"] == "merged":
        return MergedSubmetric([RepSubmetric(m) for m in maps])
    if doc["form"] == "postprocessed":
        inner = MergedSubmetric([RepSubmetric(ValueMap(m.representative, m.values, doc["shift"]))
                                 for m in maps])
        return PostprocessedSubmetric(inner)
    raise ValueError(f"cannot deserialize submetric form {doc['form']!r}")


# ---------------------------------------------------------------------------
# Measurement
# ---------------------------------------------------------------------------


@dataclass
class NontrivialityReport:
    c: float
    beta: float
    pairs_sampled: int
    zero_pairs_satisfied: bool = True
    label: str = ""

    def csv_row(self, alpha: float = float("nan"), violations: float = float("nan")) -> str:
        return f"{self.label},{self.c},{self.beta},{alpha},{violations},{self.pairs_sampled}"


def _pair_sample(universe: Universe, n_pairs: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    rng = derive_rng(seed, "pair-sample")
    idx = rng.choice(universe.size, size=(n_pairs, 2), replace=True, p=universe.weights)
    return idx[:, 0], idx[:, 1]


def _submetric_values(s: Submetric, universe: Universe, ii: np.ndarray, jj: np.ndarray) -> np.ndarray:
    els = universe.elements
    return np.array([s.evaluate(els[i], els[j]) for i, j in zip(ii, jj)])


def measure_nontriviality(s: Submetric, universe: Universe, c: float,
                          n_pairs: int = 10000, seed: int = 0,
                          exhaustive: bool | None = None,
                          label: str = "") -> NontrivialityReport:
    """Fraction of pairs (u,v) ~ U x U whose ratio s(u,v)/D(u,v) is at least c.

    Pairs at true distance zero count as satisfied (a submetric trivially
    preserves a zero distance).  Exhaustive mode weighs all N^2 ordered pairs
    by the product distribution; otherwise pairs are sampled with replacement.
    """
    if not (0 < c <= 1):
        raise ValueError("c must lie in (0,1]")
    if exhaustive is None:
        exhaustive = universe.size <= 500
    if exhaustive:
        truth = universe.distance_matrix()
        vals = s.pairwise(universe)
        w = universe.weights
        pair_w = w[:, None] * w[None, :]
        satisfied = (truth <= EVAL_TOL) | (vals >= c * truth - EVAL_TOL)
        beta = float(np.sum(pair_w * satisfied))
        return NontrivialityReport(c=c, beta=beta, pairs_sampled=universe.size**2, label=label)
    ii, jj = _pair_sample(universe, n_pairs, seed)
    truth = np.array([universe.distance(universe.element_at(i), universe.element_at(j))
                      for i, j in zip(ii, jj)])
    vals = _submetric_values(s, universe, ii, jj)
    satisfied = (truth <= EVAL_TOL) | (vals >= c * truth - EVAL_TOL)
    return NontrivialityReport(c=c, beta=float(np.mean(satisfied)), pairs_sampled=n_pairs, label=label)


def measure_overestimate(s: Submetric, universe: Universe, alpha: float,
                         n_pairs: int = 10000, seed: int = 0,
                         exhaustive: bool | None = None) -> float:
    """Fraction of pairs overestimated by at least alpha.

    Values within tolerance of the alpha boundary count as compliant (the
    global ties-are-equal convention), so a postprocessed 0-submetric
    measures zero violations at alpha = 0.
    """
    if exhaustive is None:
        exhaustive = universe.size <= 500
    if exhaustive:
        truth = universe.distance_matrix()
        vals = s.pairwise(universe)
        w = universe.weights
        pair_w = w[:, None] * w[None, :]
        return float(np.sum(pair_w * (vals - truth > alpha + EVAL_TOL)))
    ii, jj = _pair_sample(universe, n_pairs, seed)
    truth = np.array([universe.distance(universe.element_at(i), universe.element_at(j))
                      for i, j in zip(ii, jj)])
    vals = _submetric_values(s, universe, ii, jj)
    return float(np.mean(vals - truth > alpha + EVAL_TOL))


def count_strict_overestimates(s: Submetric, universe: Universe, alpha: float) -> int:
    """Number of ordered pairs with s(x,y) > D(x,y) + alpha beyond tolerance."""
    truth = universe.distance_matrix()
    vals = s.pairwise(universe)
    return int(np.sum(vals - truth > alpha + EVAL_TOL))
