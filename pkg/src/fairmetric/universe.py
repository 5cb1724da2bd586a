"""Synthetic universes with hidden ground-truth metrics.

A universe is a finite element set with features, sampling weights and a
ground metric.  The metric is hidden from the elicitation algorithms; only
the simulated arbiter and the measurement harness may evaluate it directly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from fairmetric.rng import derive_rng

#: Absolute tolerance for distance comparisons; ties within it are equal.
TIE_TOL = 1e-9

_WEIGHT_TOL = 1e-9


class InvalidParameterError(ValueError):
    """A generator or operation was called with out-of-range parameters."""


class ForeignElementError(KeyError):
    """An element id does not belong to the universe (or metric table)."""


@dataclass(frozen=True)
class Element:
    """One individual: an opaque id plus a feature vector in [0,1]^d."""

    id: str
    features: tuple[float, ...]

    @property
    def dim(self) -> int:
        return len(self.features)


class GroundMetric:
    """Hidden task metric D: U x U -> [0,1].

    Kinds:
      * ``euclidean-scaled``   -- scale * l2(u - v)
      * ``weighted-lp-scaled`` -- scale * (sum_i w_i |u_i - v_i|^p)^(1/p)
      * ``table``              -- explicit symmetric matrix keyed by element id

    ``scale`` is chosen so the range [0,1] holds exactly (diameter
    normalization for the analytic kinds; validated on load for tables).
    """

    def __init__(self, kind: str, params: dict | None = None, scale: float = 1.0):
        self.kind = kind
        self.params = dict(params or {})
        self.scale = float(scale)
        if kind == "table":
            self._load_table()
        elif kind == "weighted-lp-scaled":
            self._p = float(self.params.get("p", 2.0))
            w = self.params.get("weights")
            self._w = None if w is None else np.asarray(w, dtype=float)
        elif kind != "euclidean-scaled":
            raise InvalidParameterError(f"unknown metric kind: {kind!r}")

    # -- construction helpers -------------------------------------------------

    @classmethod
    def euclidean(cls, dim: int) -> "GroundMetric":
        """Euclidean distance on [0,1]^dim normalized by the diameter sqrt(dim)."""
        return cls("euclidean-scaled", {}, scale=1.0 / np.sqrt(dim))

    @classmethod
    def weighted_lp(cls, dim: int, p: float, weights: Sequence[float] | None = None) -> "GroundMetric":
        w = np.ones(dim) if weights is None else np.asarray(weights, dtype=float)
        if w.shape != (dim,) or np.any(w < 0) or not np.any(w > 0):
            raise InvalidParameterError("weighted-lp weights must be nonnegative, not all zero")
        diameter = float(np.sum(w * 1.0**p) ** (1.0 / p))
        return cls("weighted-lp-scaled", {"p": p, "weights": list(map(float, w))}, scale=1.0 / diameter)

    @classmethod
    def table(cls, ids: Sequence[str], matrix: np.ndarray) -> "GroundMetric":
        return cls("table", {"ids": list(ids), "matrix": np.asarray(matrix, dtype=float).tolist()}, scale=1.0)

    def _load_table(self) -> None:
        ids = self.params.get("ids")
        matrix = np.asarray(self.params.get("matrix"), dtype=float)
        if ids is None or matrix.ndim != 2 or matrix.shape != (len(ids), len(ids)):
            raise InvalidParameterError("table metric needs ids and a square matrix")
        validate_metric_matrix(matrix)
        self._table_index = {eid: i for i, eid in enumerate(ids)}
        self._matrix = matrix * self.scale

    # -- evaluation -----------------------------------------------------------

    def eval(self, u: Element, v: Element) -> float:
        if self.kind == "table":
            try:
                i, j = self._table_index[u.id], self._table_index[v.id]
            except KeyError as exc:
                raise ForeignElementError(f"element {exc.args[0]!r} not in metric table") from exc
            return float(self._matrix[i, j])
        a = np.asarray(u.features, dtype=float)
        b = np.asarray(v.features, dtype=float)
        return self._eval_features(a, b)

    def _eval_features(self, a: np.ndarray, b: np.ndarray) -> float:
        if self.kind == "euclidean-scaled":
            return float(np.sqrt(np.sum((a - b) ** 2)) * self.scale)
        diff = np.abs(a - b)
        if self._w is not None:
            diff = diff * self._w ** (1.0 / self._p)
        return float(np.sum(diff**self._p) ** (1.0 / self._p) * self.scale)

    def pairwise(self, features: np.ndarray, ids: Sequence[str] | None = None) -> np.ndarray:
        """Full distance matrix; same per-entry arithmetic as :meth:`eval`."""
        if self.kind == "table":
            idx = [self._table_index[e] for e in ids]  # type: ignore[union-attr]
            return self._matrix[np.ix_(idx, idx)]
        if self.kind == "euclidean-scaled":
            delta = features[:, None, :] - features[None, :, :]
            return np.sqrt(np.sum(delta**2, axis=-1)) * self.scale
        delta = np.abs(features[:, None, :] - features[None, :, :])
        if self._w is not None:
            delta = delta * self._w ** (1.0 / self._p)
        return np.sum(delta**self._p, axis=-1) ** (1.0 / self._p) * self.scale

    def distances_from(self, features: np.ndarray, point: np.ndarray,
                       ids: Sequence[str] | None = None, point_id: str | None = None) -> np.ndarray:
        if self.kind == "table":
            idx = [self._table_index[e] for e in ids]  # type: ignore[union-attr]
            return self._matrix[self._table_index[point_id], idx]  # type: ignore[union-attr]
        if self.kind == "euclidean-scaled":
            return np.sqrt(np.sum((features - point[None, :]) ** 2, axis=-1)) * self.scale
        delta = np.abs(features - point[None, :])
        if self._w is not None:
            delta = delta * self._w ** (1.0 / self._p)
        return np.sum(delta**self._p, axis=-1) ** (1.0 / self._p) * self.scale

    def to_json_dict(self) -> dict:
        return {"kind": self.kind, "params": self.params, "scale": self.scale}


def validate_metric_matrix(matrix: np.ndarray, tol: float = TIE_TOL) -> None:
    """Check the metric axioms on an explicit table; raise on violation."""
    n = matrix.shape[0]
    if np.any(matrix < -tol) or np.any(matrix > 1 + tol):
        raise InvalidParameterError("table distances must lie in [0,1]")
    if not np.allclose(matrix, matrix.T, atol=tol):
        raise InvalidParameterError("table metric must be symmetric")
    if np.any(np.abs(np.diag(matrix)) > tol):
        raise InvalidParameterError("table metric must be zero on the diagonal")
    for k in range(n):
        if np.any(matrix > matrix[:, k, None] + matrix[None, k, :] + tol):
            raise InvalidParameterError("table metric violates the triangle inequality")


class Universe:
    """Finite element set with weights and a hidden ground metric."""

    def __init__(self, ids: Sequence[str], features: np.ndarray, weights: np.ndarray,
                 metric: GroundMetric, seed: int | None = None):
        self.ids: list[str] = list(ids)
        self.features = np.asarray(features, dtype=float)
        self.weights = np.asarray(weights, dtype=float)
        self.metric = metric
        self.seed = seed
        if len(set(self.ids)) != len(self.ids):
            raise InvalidParameterError("element ids must be unique")
        if self.features.ndim != 2 or self.features.shape[0] != len(self.ids):
            raise InvalidParameterError("features must be an (N, d) array")
        if np.any(self.weights < 0) or abs(float(self.weights.sum()) - 1.0) > _WEIGHT_TOL:
            raise InvalidParameterError("weights must be nonnegative and sum to 1")
        self._index = {eid: i for i, eid in enumerate(self.ids)}
        self._elements = [Element(eid, tuple(map(float, self.features[i])))
                          for i, eid in enumerate(self.ids)]
        self._matrix: np.ndarray | None = None

    # -- basic access ---------------------------------------------------------

    @property
    def size(self) -> int:
        return len(self.ids)

    @property
    def dimension(self) -> int:
        return self.features.shape[1]

    @property
    def elements(self) -> list[Element]:
        return list(self._elements)

    def element(self, eid: str) -> Element:
        return self._elements[self.index_of(eid)]

    def element_at(self, i: int) -> Element:
        return self._elements[i]

    def index_of(self, eid: str) -> int:
        try:
            return self._index[eid]
        except KeyError as exc:
            raise ForeignElementError(f"element {eid!r} not in universe") from exc

    def __contains__(self, element: Element) -> bool:
        return element.id in self._index

    # -- truth-side evaluation (simulation / measurement only) ----------------

    def distance(self, u: Element, v: Element) -> float:
        if u.id not in self._index or v.id not in self._index:
            raise ForeignElementError("distance queried for a foreign element")
        if u.id == v.id:
            return 0.0
        return self.metric.eval(u, v)

    def distance_matrix(self, max_size: int = 4096) -> np.ndarray:
        if self.size > max_size:
            raise InvalidParameterError(f"distance matrix capped at N={max_size}")
        if self._matrix is None:
            m = self.metric.pairwise(self.features, self.ids)
            np.fill_diagonal(m, 0.0)
            self._matrix = m
        return self._matrix

    def distances_from_id(self, eid: str) -> np.ndarray:
        i = self.index_of(eid)
        d = self.metric.distances_from(self.features, self.features[i], self.ids, eid)
        d[i] = 0.0
        return d

    def pair_distances(self, ii: np.ndarray, jj: np.ndarray) -> np.ndarray:
        """Vectorized truth distances for index pairs (measurement side)."""
        ii = np.asarray(ii)
        jj = np.asarray(jj)
        if self.metric.kind == "table":
            return self.distance_matrix()[ii, jj]
        if self.metric.kind == "euclidean-scaled":
            delta = self.features[ii] - self.features[jj]
            out = np.sqrt(np.sum(delta**2, axis=-1)) * self.metric.scale
        else:
            out = np.array([self.metric._eval_features(self.features[i], self.features[j])
                            for i, j in zip(ii, jj)])
        out[ii == jj] = 0.0
        return out

    def sample_elements(self, n: int, rng: np.random.Generator) -> list[Element]:
        idx = rng.choice(self.size, size=n, replace=True, p=self.weights)
        return [self._elements[i] for i in idx]

    # -- serialization --------------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "seed": self.seed,
            "metric": self.metric.to_json_dict(),
            "elements": [{"id": e.id, "features": list(e.features)} for e in self._elements],
            "weights": [float(w) for w in self.weights],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)

    @classmethod
    def from_json_dict(cls, doc: dict) -> "Universe":
        metric = GroundMetric(**doc["metric"])
        ids = [e["id"] for e in doc["elements"]]
        features = np.array([e["features"] for e in doc["elements"]], dtype=float)
        weights = np.array(doc["weights"], dtype=float)
        return cls(ids, features, weights, metric, seed=doc.get("seed"))

    @classmethod
    def from_json(cls, text: str) -> "Universe":
        return cls.from_json_dict(json.loads(text))


def metric_eval(metric: GroundMetric, u: Element, v: Element) -> float:
    """Evaluate the ground metric on a pair; zero on identical ids."""
    if u.id == v.id:
        return 0.0
    return metric.eval(u, v)


def _make_ids(n: int) -> list[str]:
    return [f"e{i:05d}" for i in range(n)]


def gen_uniform_square(n: int, d: int, seed: int, metric: GroundMetric | None = None) -> Universe:
    """Universe of n i.i.d. uniform points in [0,1]^d with uniform weights.

    Deterministic under the seed.  The default metric is Euclidean distance
    normalized by the diameter sqrt(d); d=1 gives a line universe.
    """
    if n < 2:
        raise InvalidParameterError("need at least 2 elements")
    if d < 1:
        raise InvalidParameterError("dimension must be >= 1")
    rng = derive_rng(seed, "gen-uniform-square")
    features = rng.random((n, d))
    weights = np.full(n, 1.0 / n)
    return Universe(_make_ids(n), features, weights, metric or GroundMetric.euclidean(d), seed=seed)


def gen_clustered(n: int, k: int, spread: float, seed: int, d: int = 2,
                  metric: GroundMetric | None = None) -> Universe:
    """Universe of k Gaussian clusters clipped to [0,1]^d, uniform weights.

    Cluster centers sit evenly on the main diagonal from (0.1,...) to
    (0.9,...), so with the default diameter-normalized Euclidean metric the
    two extreme centers are exactly 0.8 apart.  Elements are assigned to
    clusters round-robin, so cluster sizes differ by at most one.
    """
    if n < 2 or k < 1 or n < k:
        raise InvalidParameterError("need n >= k >= 1 and n >= 2")
    if not (0 < spread < 0.5):
        raise InvalidParameterError("spread must lie in (0, 0.5)")
    if d < 1:
        raise InvalidParameterError("dimension must be >= 1")
    rng = derive_rng(seed, "gen-clustered")
    if k == 1:
        centers = np.full((1, d), 0.5)
    else:
        line = 0.1 + 0.8 * np.arange(k) / (k - 1)
        centers = np.tile(line[:, None], (1, d))
    assignment = np.arange(n) % k
    features = np.clip(centers[assignment] + spread * rng.standard_normal((n, d)), 0.0, 1.0)
    weights = np.full(n, 1.0 / n)
    return Universe(_make_ids(n), features, weights, metric or GroundMetric.euclidean(d), seed=seed)


def random_table_universe(n: int, seed: int, embed_dim: int = 4) -> Universe:
    """Small universe whose metric is an explicit validated table.

    The table is built from random embedded points, so the metric axioms hold
    by construction; storing it as a table exercises the brute-force path.
    """
    if n < 2:
        raise InvalidParameterError("need at least 2 elements")
    if n > 1000:
        raise InvalidParameterError("table universes are capped at N=1000")
    rng = derive_rng(seed, "gen-table")
    points = rng.random((n, embed_dim))
    delta = points[:, None, :] - points[None, :, :]
    matrix = np.sqrt(np.sum(delta**2, axis=-1)) / np.sqrt(embed_dim)
    np.fill_diagonal(matrix, 0.0)
    ids = _make_ids(n)
    metric = GroundMetric.table(ids, matrix)
    # features are kept for learner plumbing even though the metric ignores them
    return Universe(ids, points, np.full(n, 1.0 / n), metric, seed=seed)
