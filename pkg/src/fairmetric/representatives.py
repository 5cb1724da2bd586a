"""Representative selection, net verification, and density/diffusion estimation.

Random representative sets of size (1/b) ln(1/(b delta)) are likely to land
within 3*gamma of every element of the dense part of the universe; coverage
plus diffusion then lower-bound how nontrivial the merged representative
submetric can be.  All estimators here read the ground metric directly and
exist only on the simulation/measurement side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from fairmetric.rng import derive_rng
from fairmetric.universe import TIE_TOL, Element, InvalidParameterError, Universe

#: Universes up to this size are measured exhaustively, larger ones sampled.
EXHAUSTIVE_LIMIT = 2000


@dataclass
class DensityEstimate:
    """For each neighbor-mass threshold b, the element weight a achieving it."""

    gamma: float
    curve: list[tuple[float, float]]
    n: int

    def a_at(self, b: float) -> float:
        best = 0.0
        for bb, aa in self.curve:
            if bb <= b + TIE_TOL:
                best = aa
        return best

    def csv_rows(self) -> list[str]:
        return [f"{self.gamma},{b},{a},{self.n}" for b, a in self.curve]


@dataclass
class DiffusionEstimate:
    zeta: float
    p: float
    n: int

    def csv_row(self) -> str:
        return f"{self.zeta},{self.p},{self.n}"


@dataclass
class NetReport:
    gamma: float
    covered_weight: float
    reps: list[str]

    def csv_row(self, seed: int | None = None) -> str:
        return f"{self.gamma},{self.covered_weight},{len(self.reps)},{seed}"


def rep_set_size(b: float, delta: float, budget_split: bool = False) -> int:
    """Sample size (1/b) ln(1/(b delta)), or ln(2/(b delta)) in budget-split mode."""
    if not (0 < b < 1) or not (0 < delta < 1):
        raise InvalidParameterError("b and delta must lie in (0,1)")
    numerator = 2.0 if budget_split else 1.0
    return max(1, math.ceil((1.0 / b) * math.log(numerator / (b * delta))))


def sample_representatives(universe: Universe, b: float, delta: float, seed: int,
                           budget_split: bool = False) -> list[Element]:
    """I.i.d. representative draws from the universe distribution."""
    size = rep_set_size(b, delta, budget_split=budget_split)
    rng = derive_rng(seed, "sample-representatives")
    return universe.sample_elements(size, rng)


def greedy_representatives(universe: Universe, gamma: float, max_reps: int) -> list[Element]:
    """Greedy max-coverage net construction (no theoretical guarantee claimed).

    Each step adds the element covering the most yet-uncovered weight within
    gamma.  Practical alternative to random sampling on structured universes.
    """
    if universe.size > EXHAUSTIVE_LIMIT:
        raise InvalidParameterError("greedy selection needs the full distance matrix")
    d = universe.distance_matrix()
    w = universe.weights
    uncovered = np.ones(universe.size, dtype=bool)
    chosen: list[int] = []
    within = d <= gamma + TIE_TOL
    for _ in range(max_reps):
        gains = within[:, uncovered] @ w[uncovered] if uncovered.any() else np.zeros(universe.size)
        best = int(np.argmax(gains))
        if gains[best] <= 0:
            break
        chosen.append(best)
        uncovered &= ~within[best]
    return [universe.element_at(i) for i in chosen]


def verify_net(reps: list[Element], universe: Universe, gamma: float) -> NetReport:
    """Weight of elements within gamma of some representative.

    This checks min-distance coverage rather than the ball-quantified net
    definition; the two coincide for point coverage and min-distance coverage
    is all the contraction analysis needs.
    """
    if not reps:
        return NetReport(gamma=gamma, covered_weight=0.0, reps=[])
    mins = np.full(universe.size, np.inf)
    for r in reps:
        mins = np.minimum(mins, universe.distances_from_id(r.id))
    covered = mins <= gamma + TIE_TOL
    return NetReport(gamma=gamma, covered_weight=float(universe.weights[covered].sum()),
                     reps=[r.id for r in reps])


def neighbor_mass(universe: Universe, gamma: float) -> np.ndarray:
    """Per-element weight of the universe within distance gamma (self included)."""
    if universe.size <= EXHAUSTIVE_LIMIT:
        d = universe.distance_matrix()
        return (d <= gamma + TIE_TOL) @ universe.weights
    out = np.empty(universe.size)
    for i in range(universe.size):
        row = universe.distances_from_id(universe.ids[i])
        out[i] = float(universe.weights[row <= gamma + TIE_TOL].sum())
    return out


def estimate_density(universe: Universe, gamma: float,
                     b_grid: np.ndarray | None = None,
                     n_samples: int = 500, seed: int = 0) -> DensityEstimate:
    """(b, a) density curve at radius gamma.

    a(b) is the weight of elements whose gamma-ball carries at least b of the
    distribution.  Exhaustive for universes up to EXHAUSTIVE_LIMIT elements,
    otherwise estimated on a weighted element sample (ball masses themselves
    are always computed exactly from the element's full distance row).
    """
    if not (0 < gamma <= 1):
        raise InvalidParameterError("gamma must lie in (0,1]")
    if b_grid is None:
        b_grid = np.round(np.linspace(0.0, 1.0, 51), 6)
    if universe.size <= EXHAUSTIVE_LIMIT:
        mass = neighbor_mass(universe, gamma)
        weights = universe.weights
        n = universe.size
    else:
        rng = derive_rng(seed, "density")
        idx = rng.choice(universe.size, size=n_samples, replace=True, p=universe.weights)
        mass = np.empty(n_samples)
        for k, i in enumerate(idx):
            row = universe.distances_from_id(universe.ids[int(i)])
            mass[k] = float(universe.weights[row <= gamma + TIE_TOL].sum())
        weights = np.full(n_samples, 1.0 / n_samples)
        n = n_samples
    curve = [(float(b), float(weights[mass >= b - TIE_TOL].sum())) for b in b_grid]
    return DensityEstimate(gamma=gamma, curve=curve, n=n)


def estimate_diffusion(universe: Universe, zeta: float,
                       n_pairs: int = 20000, seed: int = 0) -> DiffusionEstimate:
    """p = Pr[D(u,v) >= zeta] over independent pair draws from the distribution."""
    if not (0 < zeta <= 1):
        raise InvalidParameterError("zeta must lie in (0,1]")
    if universe.size <= EXHAUSTIVE_LIMIT:
        d = universe.distance_matrix()
        w = universe.weights
        p = float(((d >= zeta - TIE_TOL) * (w[:, None] * w[None, :])).sum())
        return DiffusionEstimate(zeta=zeta, p=p, n=universe.size**2)
    rng = derive_rng(seed, "diffusion")
    ii = rng.choice(universe.size, size=n_pairs, replace=True, p=universe.weights)
    jj = rng.choice(universe.size, size=n_pairs, replace=True, p=universe.weights)
    vals = np.array([universe.distance(universe.element_at(int(i)), universe.element_at(int(j)))
                     for i, j in zip(ii, jj)])
    return DiffusionEstimate(zeta=zeta, p=float(np.mean(vals >= zeta - TIE_TOL)), n=n_pairs)


def nontriviality_bound(p: float, cover_weight: float, eps: float = 0.0) -> float:
    """max(0, p - (1 - w)^2 - eps): guaranteed nontrivial pair mass.

    ``cover_weight`` may be either the measured net coverage or the density
    weight a, matching how the coverage and generalization bounds compose.
    """
    for v in (p, cover_weight, eps):
        if not (0 <= v <= 1):
            raise InvalidParameterError("bound inputs must lie in [0,1]")
    return max(0.0, p - (1.0 - cover_weight) ** 2 - eps)
