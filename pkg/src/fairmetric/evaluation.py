"""Experiment harness: brute-force oracles, seeded end-to-end runs, doubling
experiments, and report files (JSON + CSV + rendered figures).

Every acceptance check is driven by a named experiment spec (see specs/ in
the repository root); a report is a pure function of (spec, seeds), so
reruns produce byte-identical bodies.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from fairmetric.arbiter import ExactArbiter, TctcArbiter, TctcParams
from fairmetric.elicitation import (
    merge_orderings,
    tctc_merge_orderings,
    triplet_ordering,
)
from fairmetric.learning import ThresholdSet, submetric_learner, tctc_submetric_learner
from fairmetric.representatives import (
    estimate_density,
    estimate_diffusion,
    nontriviality_bound,
    rep_set_size,
    verify_net,
)
from fairmetric.rng import derive_rng
from fairmetric.submetric import (
    MergedSubmetric,
    ValueMap,
    count_strict_overestimates,
    measure_nontriviality,
    measure_overestimate,
    merge,
    rep_submetric,
)
from fairmetric.universe import (
    Element,
    InvalidParameterError,
    Universe,
    gen_clustered,
    gen_uniform_square,
    random_table_universe,
)

#: Fixed constant for all query-ceiling checks (count <= C * analytic bound).
BOUND_CONSTANT = 8.0


class SizeExceededError(ValueError):
    """Brute-force oracle requested on a universe beyond its size cap."""


class SpecInvalidError(ValueError):
    """Experiment spec failed validation."""


def brute_force_submetric(universe: Universe, reps: list[Element]) -> MergedSubmetric:
    """Exact maxmerged representative submetric (unlimited-query oracle).

    The reference every elicited or learned submetric is compared against;
    alpha is exactly 0 by construction.
    """
    if universe.size > 500:
        raise SizeExceededError("brute-force oracle capped at N=500")
    maps = []
    for r in reps:
        row = universe.distances_from_id(r.id)
        maps.append(ValueMap(representative=r.id,
                             values={eid: float(row[i]) for i, eid in enumerate(universe.ids)},
                             alpha=0.0))
    return merge([rep_submetric(m) for m in maps])


# ---------------------------------------------------------------------------
# Experiment specs
# ---------------------------------------------------------------------------

_UNIVERSE_KINDS = ("uniform", "clustered", "table")
_SPEC_KINDS = ("elicit", "doubling", "density-diffusion", "net-trials", "learning")


@dataclass
class ExperimentSpec:
    """Declarative description of one seeded experiment family."""

    name: str
    kind: str
    universe: dict
    params: dict = field(default_factory=dict)
    seeds: list[int] = field(default_factory=lambda: [0])
    mode: str = "exact"

    def __post_init__(self):
        if self.kind not in _SPEC_KINDS:
            raise SpecInvalidError(f"kind must be one of {_SPEC_KINDS}")
        if self.mode not in ("exact", "tctc"):
            raise SpecInvalidError("mode must be 'exact' or 'tctc'")
        if self.universe.get("kind", "uniform") not in _UNIVERSE_KINDS:
            raise SpecInvalidError(f"universe kind must be one of {_UNIVERSE_KINDS}")
        if not self.seeds:
            raise SpecInvalidError("need at least one seed")
        if self.mode == "tctc":
            try:
                self.tctc_params()
            except InvalidParameterError as exc:
                raise SpecInvalidError(str(exc)) from exc

    def tctc_params(self) -> TctcParams:
        p = self.params
        return TctcParams(alpha_l=p.get("alpha_l", 0.02), alpha_h=p.get("alpha_h", 0.04),
                          gray_policy=p.get("gray_policy", "always-answer"),
                          gray_q=p.get("gray_q", 0.5),
                          noise_model=p.get("noise_model", "zero"),
                          noise_eta=p.get("noise_eta", 0.0),
                          noise_sign=p.get("noise_sign", 1))

    def build_universe(self, seed: int, n: int | None = None) -> Universe:
        u = self.universe
        kind = u.get("kind", "uniform")
        n = n if n is not None else u.get("n", 256)
        if kind == "uniform":
            return gen_uniform_square(n, u.get("d", 2), seed)
        if kind == "clustered":
            return gen_clustered(n, u.get("k", 4), u.get("spread", 0.05), seed, d=u.get("d", 2))
        return random_table_universe(n, seed, embed_dim=u.get("embed_dim", 4))

    def to_json_dict(self) -> dict:
        return {"name": self.name, "kind": self.kind, "universe": self.universe,
                "params": self.params, "seeds": self.seeds, "mode": self.mode}

    @classmethod
    def from_json_dict(cls, doc: dict) -> "ExperimentSpec":
        return cls(name=doc["name"], kind=doc["kind"], universe=doc["universe"],
                   params=doc.get("params", {}), seeds=list(doc.get("seeds", [0])),
                   mode=doc.get("mode", "exact"))

    @classmethod
    def from_json_file(cls, path: str | Path) -> "ExperimentSpec":
        return cls.from_json_dict(json.loads(Path(path).read_text()))


@dataclass
class ExperimentReport:
    spec: ExperimentSpec
    per_seed: list[dict]
    checks: list[dict]
    summary: dict

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.checks)

    def to_json_dict(self) -> dict:
        return {"spec": self.spec.to_json_dict(), "per_seed": self.per_seed,
                "checks": self.checks, "summary": self.summary}

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)

    def csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["label", "pass", "measured", "bound"])
        for c in self.checks:
            writer.writerow([c["label"], int(c["pass"]), c.get("measured"), c.get("bound")])
        return buf.getvalue()

    def pass_fail_lines(self) -> list[str]:
        return [f"[{'PASS' if c['pass'] else 'FAIL'}] {self.spec.name}: {c['label']} "
                f"(measured={c.get('measured')}, bound={c.get('bound')})" for c in self.checks]


# ---------------------------------------------------------------------------
# Elicitation runs
# ---------------------------------------------------------------------------


def _pick_reps(universe: Universe, n_reps: int, seed: int) -> list[Element]:
    rng = derive_rng(seed, "experiment-reps")
    idx = rng.choice(universe.size, size=n_reps, replace=False, p=universe.weights)
    return [universe.element_at(int(i)) for i in idx]


def elicit_merged(universe: Universe, reps: list[Element], mode: str, alpha: float,
                  params: TctcParams | None = None, arbiter_seed: int = 0):
    """Run the full fixed-sample elicitation; returns (submetric, ledger)."""
    sample = universe.elements
    if mode == "exact":
        arb = ExactArbiter(universe)
        orderings = [triplet_ordering(arb, sample, r) for r in reps]
        maps = merge_orderings(arb, orderings, alpha)
    else:
        arb = TctcArbiter(universe, params, seed=arbiter_seed)
        maps, _ = tctc_merge_orderings(arb, sample, reps)
    sub = merge([rep_submetric(m) for m in maps])
    return sub, arb.ledger


def _elicit_rows(spec: ExperimentSpec, jobs: int = 1) -> list[dict]:
    p = spec.params
    n_values = p.get("n_values", [spec.universe.get("n", 256)])
    alpha_values = p.get("alpha_values", [p.get("alpha", 0.1)])
    args = [(spec, seed, int(n), float(alpha))
            for n in n_values for alpha in alpha_values for seed in spec.seeds]
    return _fan_out(_elicit_seed_row, args, jobs)


def _elicit_seed_row(spec: ExperimentSpec, seed: int, n_override: int | None = None,
                     alpha_override: float | None = None) -> dict:
    universe = spec.build_universe(seed, n=n_override)
    p = spec.params
    n_reps = int(p.get("n_reps", 1))
    reps = _pick_reps(universe, n_reps, seed)
    alpha = float(alpha_override if alpha_override is not None else p.get("alpha", 0.1))
    tp = spec.tctc_params() if spec.mode == "tctc" else None
    sub, ledger = elicit_merged(universe, reps, spec.mode, alpha, tp, arbiter_seed=seed)
    n = universe.size
    row: dict = {"seed": seed, "n": n, "n_reps": n_reps,
                 "ledger": ledger.to_json_dict()}
    if spec.mode == "exact":
        bound_alpha = alpha
        row["real_bound"] = BOUND_CONSTANT * max(1.0 / alpha, math.log2(max(2, n_reps * n)))
        row["triplet_bound"] = BOUND_CONSTANT * n_reps * n * math.ceil(math.log2(max(2, n)))
        row["quad_bound"] = BOUND_CONSTANT * n_reps * n * max(1.0, math.ceil(math.log2(max(2, n_reps))))
    else:
        bound_alpha = 4.0 * tp.alpha_h
        row["real_bound"] = BOUND_CONSTANT / tp.alpha_l
        row["quad_bound"] = BOUND_CONSTANT * n_reps * n * math.ceil(math.log2(1.0 / tp.alpha_l))
    if n <= 500:
        row["strict_overestimates"] = count_strict_overestimates(sub, universe, bound_alpha)
        row["violation_rate"] = measure_overestimate(sub, universe, bound_alpha, exhaustive=True)
    else:
        row["violation_rate"] = measure_overestimate(sub, universe, bound_alpha,
                                                     n_pairs=int(p.get("n_pairs", 10000)),
                                                     seed=seed, exhaustive=False)
    c = float(p.get("c", 0.5))
    rep_nt = measure_nontriviality(sub, universe, c, n_pairs=int(p.get("n_pairs", 10000)),
                                   seed=seed, exhaustive=n <= 500, label=spec.name)
    row["alpha"] = bound_alpha
    row["beta"] = rep_nt.beta
    row["c"] = c
    return row


def _elicit_checks(spec: ExperimentSpec, rows: list[dict]) -> list[dict]:
    checks = []
    if all("strict_overestimates" in r for r in rows):
        worst = max(r["strict_overestimates"] for r in rows)
        checks.append({"label": "zero strict overestimates (exhaustive)",
                       "pass": worst == 0, "measured": worst, "bound": 0})
    reals = [r["ledger"]["real"] for r in rows]
    checks.append({"label": "real-query ceiling",
                   "pass": all(c <= r["real_bound"] for c, r in zip(reals, rows)),
                   "measured": max(reals), "bound": rows[0]["real_bound"]})
    if spec.mode == "exact":
        trips = [r["ledger"]["triplet"] for r in rows]
        checks.append({"label": "triplet-query ceiling",
                       "pass": all(c <= r["triplet_bound"] for c, r in zip(trips, rows)),
                       "measured": max(trips), "bound": rows[0]["triplet_bound"]})
    quads = [r["ledger"]["quad"] for r in rows]
    checks.append({"label": "quad-query ceiling",
                   "pass": all(c <= r["quad_bound"] for c, r in zip(quads, rows)),
                   "measured": max(quads), "bound": rows[0]["quad_bound"]})
    return checks


# ---------------------------------------------------------------------------
# Doubling experiments
# ---------------------------------------------------------------------------

_AXES = ("N", "R", "inv_alpha", "inv_alpha_l")


def doubling_experiment(spec: ExperimentSpec, axis: str, points: int):
    """Mean query counts against a doubling axis, with per-doubling ratios."""
    if axis not in _AXES:
        raise SpecInvalidError(f"axis must be one of {_AXES}")
    if points < 3:
        raise SpecInvalidError("need at least 3 points")
    p = spec.params
    base_n = int(spec.universe.get("n", 256))
    base_reps = int(p.get("n_reps", 1))
    base_alpha = float(p.get("alpha", 0.1))
    table = []
    for step in range(points):
        factor = 2**step
        n, n_reps, alpha = base_n, base_reps, base_alpha
        tp = spec.tctc_params() if spec.mode == "tctc" else None
        if axis == "N":
            n = base_n * factor
        elif axis == "R":
            n_reps = base_reps * factor
        elif axis == "inv_alpha":
            alpha = base_alpha / factor
        else:
            tp = TctcParams(alpha_l=tp.alpha_l / factor, alpha_h=tp.alpha_h / factor,
                            gray_policy=tp.gray_policy, gray_q=tp.gray_q,
                            noise_model=tp.noise_model, noise_eta=tp.noise_eta / factor,
                            noise_sign=tp.noise_sign)
        counts = {"real": [], "triplet": [], "quad": []}
        for seed in spec.seeds:
            universe = spec.build_universe(seed, n=n)
            reps = _pick_reps(universe, n_reps, seed)
            _, ledger = elicit_merged(universe, reps, spec.mode, alpha, tp, arbiter_seed=seed)
            doc = ledger.to_json_dict()
            for k in counts:
                counts[k].append(doc[k])
        axis_value = {"N": n, "R": n_reps, "inv_alpha": 1.0 / alpha,
                      "inv_alpha_l": (1.0 / tp.alpha_l if tp else None)}[axis]
        table.append({"axis": axis, "value": axis_value, "n": n, "n_reps": n_reps,
                      "alpha": alpha,
                      **{f"mean_{k}": float(np.mean(v)) for k, v in counts.items()},
                      **{f"max_{k}": int(np.max(v)) for k, v in counts.items()}})
    for prev, cur in zip(table, table[1:]):
        for k in ("real", "triplet", "quad"):
            denom = prev[f"mean_{k}"]
            cur[f"ratio_{k}"] = (cur[f"mean_{k}"] / denom) if denom > 0 else float("nan")
    return table


def doubling_csv(table: list[dict]) -> str:
    buf = io.StringIO()
    keys = sorted({k for row in table for k in row})
    writer = csv.DictWriter(buf, fieldnames=keys)
    writer.writeheader()
    for row in table:
        writer.writerow(row)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Density / diffusion and net-formation runs
# ---------------------------------------------------------------------------


def _density_seed_row(spec: ExperimentSpec, seed: int) -> dict:
    universe = spec.build_universe(seed)
    p = spec.params
    gamma = float(p.get("gamma", 0.1))
    zeta = float(p.get("zeta", 0.4))
    dens = estimate_density(universe, gamma, seed=seed)
    diff = estimate_diffusion(universe, zeta, seed=seed)
    return {"seed": seed, "gamma": gamma, "zeta": zeta,
            "a": dens.a_at(float(p.get("b", 0.04))), "b": float(p.get("b", 0.04)),
            "p": diff.p, "curve": dens.curve}


def _density_checks(spec: ExperimentSpec, rows: list[dict]) -> list[dict]:
    p = spec.params
    mean_a = float(np.mean([r["a"] for r in rows]))
    mean_p = float(np.mean([r["p"] for r in rows]))
    checks = []
    if "target_a" in p:
        lo, hi = p["target_a"] - p.get("tol_a", 0.06), p["target_a"] + p.get("tol_a", 0.06)
        checks.append({"label": f"density a at (gamma={p.get('gamma')}, b={p.get('b')})",
                       "pass": lo <= mean_a <= hi, "measured": round(mean_a, 4),
                       "bound": f"[{lo:.2f},{hi:.2f}]"})
    if "target_p" in p:
        lo, hi = p["target_p"] - p.get("tol_p", 0.05), p["target_p"] + p.get("tol_p", 0.05)
        checks.append({"label": f"diffusion p at zeta={p.get('zeta')}",
                       "pass": lo <= mean_p <= hi, "measured": round(mean_p, 4),
                       "bound": f"[{lo:.2f},{hi:.2f}]"})
    return checks


def _net_trials_rows(spec: ExperimentSpec) -> list[dict]:
    p = spec.params
    gamma = float(p.get("gamma", 0.05))
    b = float(p.get("b", 0.15))
    delta = float(p.get("delta", 0.1))
    c = float(p.get("c", 0.5))
    universe = spec.build_universe(int(p.get("universe_seed", 0)))
    dens = estimate_density(universe, gamma)
    a = dens.a_at(b)
    zeta = min(1.0, 6.0 * gamma / (1.0 - c))
    diff = estimate_diffusion(universe, zeta)
    size = rep_set_size(b, delta)
    rows = []
    for seed in spec.seeds:
        rng = derive_rng(seed, "net-trial")
        reps = universe.sample_elements(size, rng)
        report = verify_net(reps, universe, 3.0 * gamma)
        row = {"seed": seed, "covered": report.covered_weight, "a": a, "b": b,
               "n_reps": size, "net_pass": bool(report.covered_weight >= a - 1e-12)}
        if row["net_pass"]:
            sub = brute_force_submetric(universe, list({r.id: r for r in reps}.values()))
            nt = measure_nontriviality(sub, universe, c, exhaustive=True)
            bound = nontriviality_bound(diff.p, report.covered_weight)
            row.update({"beta": nt.beta, "bound": bound, "p": diff.p, "zeta": zeta,
                        "bound_pass": bool(nt.beta >= bound - 1e-12)})
        rows.append(row)
    return rows


def _net_checks(spec: ExperimentSpec, rows: list[dict]) -> list[dict]:
    delta = float(spec.params.get("delta", 0.1))
    fail_rate = float(np.mean([not r["net_pass"] for r in rows]))
    checks = [{"label": f"3*gamma cover of weight a fails in <= delta+0.05 of trials",
               "pass": fail_rate <= delta + 0.05, "measured": round(fail_rate, 4),
               "bound": delta + 0.05}]
    bound_rows = [r for r in rows if r.get("net_pass")]
    violations = sum(1 for r in bound_rows if not r["bound_pass"])
    checks.append({"label": "beta >= p - (1-w)^2 on every net-passing trial",
                   "pass": violations == 0, "measured": violations, "bound": 0})
    return checks


# ---------------------------------------------------------------------------
# Learning runs
# ---------------------------------------------------------------------------


def _learning_context(spec: ExperimentSpec) -> dict:
    """Seed-independent pieces of a learning run (universe, density, diffusion)."""
    p = spec.params
    universe = spec.build_universe(int(p.get("universe_seed", 0)))
    ts = ThresholdSet.even_grid(float(p.get("granularity", 0.1)))
    b, c = float(p.get("b", 0.25)), float(p.get("c", 0.5))
    gamma = float(p.get("gamma", 0.1))
    alpha_nominal = ts.alpha_t if spec.mode == "exact" else 4.0 * ts.alpha_t
    dens = estimate_density(universe, gamma)
    a = dens.a_at(b)
    zeta = min(1.0, (6.0 * gamma + alpha_nominal) / (1.0 - c))
    diff = estimate_diffusion(universe, zeta)
    return {"universe": universe, "ts": ts, "a": a, "p": diff.p, "zeta": zeta, "c": c}


def _learning_seed_row(spec: ExperimentSpec, seed: int, ctx: dict | None = None) -> dict:
    p = spec.params
    ctx = ctx or _learning_context(spec)
    universe = ctx["universe"]
    ts = ctx["ts"]
    eps, delta, b = float(p.get("eps", 0.1)), float(p.get("delta", 0.1)), float(p.get("b", 0.25))
    max_sample = int(p.get("max_sample", 4000))
    if spec.mode == "exact":
        arb = ExactArbiter(universe)
        hyp = submetric_learner(arb, universe, eps, delta, b, ts, seed=seed,
                                max_sample=max_sample)
    else:
        arb = TctcArbiter(universe, spec.tctc_params(), seed=seed)
        hyp = tctc_submetric_learner(arb, universe, eps, delta, b, ts, seed=seed,
                                     max_sample=max_sample)
    n_pairs = int(p.get("n_pairs", 10000))
    rng = derive_rng(seed, "heldout-pairs")
    ii = rng.choice(universe.size, size=n_pairs, replace=True, p=universe.weights)
    jj = rng.choice(universe.size, size=n_pairs, replace=True, p=universe.weights)
    d_true = universe.pair_distances(ii, jj)
    vals = hyp.pair_values(universe.features[ii], universe.features[jj])
    over_rate = float(np.mean(vals - d_true >= hyp.alpha - 1e-9))
    c = ctx["c"]
    ratio_ok = (d_true <= 1e-9) | (vals >= c * d_true - 1e-9)
    beta = float(np.mean(ratio_ok))
    bound = nontriviality_bound(ctx["p"], ctx["a"], eps)
    return {"seed": seed, "over_rate": over_rate, "beta": beta, "bound": bound,
            "a": ctx["a"], "p": ctx["p"], "ledger": arb.ledger.to_json_dict(),
            "meta": hyp.meta}


def _learning_checks(spec: ExperimentSpec, rows: list[dict]) -> list[dict]:
    eps = float(spec.params.get("eps", 0.1))
    frac = float(spec.params.get("pass_fraction", 0.85))
    over_ok = float(np.mean([r["over_rate"] <= eps for r in rows]))
    beta_ok = float(np.mean([r["beta"] >= r["bound"] - 1e-12 for r in rows]))
    return [
        {"label": f"held-out overestimate rate <= eps in >= {frac:.0%} of runs",
         "pass": over_ok >= frac, "measured": round(over_ok, 4), "bound": frac},
        {"label": f"nontriviality >= max(0, p-(1-a)^2-eps) in >= {frac:.0%} of runs",
         "pass": beta_ok >= frac, "measured": round(beta_ok, 4), "bound": frac},
    ]


# ---------------------------------------------------------------------------
# Dispatcher and report output
# ---------------------------------------------------------------------------


def _fan_out(fn, args_list: list[tuple], jobs: int) -> list:
    """Map seeds over a worker pool; results merged in submission order."""
    if jobs <= 1 or len(args_list) <= 1:
        return [fn(*args) for args in args_list]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, *zip(*args_list)))


def run_experiment(spec: ExperimentSpec, outdir: str | Path | None = None,
                   figures: bool = True, jobs: int = 1) -> ExperimentReport:
    """Run a named experiment across its seeds and assemble the report."""
    if spec.kind == "elicit":
        rows = _elicit_rows(spec, jobs)
        checks = _elicit_checks(spec, rows)
    elif spec.kind == "density-diffusion":
        rows = _fan_out(_density_seed_row, [(spec, s) for s in spec.seeds], jobs)
        checks = _density_checks(spec, rows)
    elif spec.kind == "net-trials":
        rows = _net_trials_rows(spec)
        checks = _net_checks(spec, rows)
    elif spec.kind == "learning":
        ctx = None if jobs > 1 else _learning_context(spec)
        rows = _fan_out(_learning_seed_row, [(spec, s, ctx) for s in spec.seeds], jobs)
        checks = _learning_checks(spec, rows)
    else:  # doubling
        axis = spec.params.get("axis", "N")
        rows = doubling_experiment(spec, axis, int(spec.params.get("points", 4)))
        checks = _doubling_checks(spec, rows)
    summary = {"n_seeds": len(spec.seeds), "passed": all(c["pass"] for c in checks)}
    report = ExperimentReport(spec=spec, per_seed=rows, checks=checks, summary=summary)
    if outdir is not None:
        write_report(report, outdir, figures=figures)
    return report


def _doubling_checks(spec: ExperimentSpec, table: list[dict]) -> list[dict]:
    p = spec.params
    checks = []
    for key, lo, hi in p.get("ratio_checks", []):
        ratios = [row[f"ratio_{key}"] for row in table[1:]]
        ok = all(lo <= r <= hi for r in ratios)
        checks.append({"label": f"{key} per-doubling ratio within [{lo}, {hi}]",
                       "pass": ok, "measured": [round(r, 3) for r in ratios],
                       "bound": f"[{lo},{hi}]"})
    return checks


def write_report(report: ExperimentReport, outdir: str | Path, figures: bool = True) -> Path:
    """Persist report.json + report.csv (+ figures) under outdir/<spec name>/."""
    base = Path(outdir) / report.spec.name
    base.mkdir(parents=True, exist_ok=True)
    (base / "report.json").write_text(report.to_json())
    (base / "report.csv").write_text(report.csv_text())
    if figures:
        try:
            render_figures(report, base)
        except Exception:
            # figure rendering must never invalidate the numeric report
            pass
    return base


def render_figures(report: ExperimentReport, base: Path) -> list[Path]:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    made = []
    figdir = base / "figures"
    spec = report.spec
    if spec.kind == "density-diffusion" and report.per_seed:
        figdir.mkdir(exist_ok=True)
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for row in report.per_seed:
            bs, as_ = zip(*row["curve"])
            ax.plot(bs, as_, alpha=0.6, label=f"seed {row['seed']}")
        ax.set_xlabel("neighbor mass threshold b")
        ax.set_ylabel("element weight a")
        ax.set_title(f"density curve at gamma={spec.params.get('gamma')}")
        ax.legend(fontsize=7)
        path = figdir / "density_curve.png"
        fig.savefig(path, dpi=120, bbox_inches="tight")
        plt.close(fig)
        made.append(path)
    if spec.kind == "doubling" and report.per_seed:
        figdir.mkdir(exist_ok=True)
        fig, ax = plt.subplots(figsize=(5, 3.5))
        xs = [row["value"] for row in report.per_seed]
        for key in ("real", "triplet", "quad"):
            ys = [row[f"mean_{key}"] for row in report.per_seed]
            if any(y > 0 for y in ys):
                ax.plot(xs, ys, marker="o", label=key)
        ax.set_xscale("log", base=2)
        ax.set_yscale("log", base=2)
        ax.set_xlabel(report.per_seed[0]["axis"])
        ax.set_ylabel("mean query count")
        ax.legend(fontsize=8)
        path = figdir / "query_scaling.png"
        fig.savefig(path, dpi=120, bbox_inches="tight")
        plt.close(fig)
        made.append(path)
    if spec.kind in ("elicit", "learning") and report.per_seed:
        figdir.mkdir(exist_ok=True)
        fig, ax = plt.subplots(figsize=(5, 3.5))
        seeds = [row["seed"] for row in report.per_seed]
        key = "violation_rate" if spec.kind == "elicit" else "over_rate"
        ax.bar([str(s) for s in seeds], [row.get(key, 0.0) for row in report.per_seed])
        ax.set_xlabel("seed")
        ax.set_ylabel("overestimate violation rate")
        path = figdir / "overestimate_rates.png"
        fig.savefig(path, dpi=120, bbox_inches="tight")
        plt.close(fig)
        made.append(path)
    return made
