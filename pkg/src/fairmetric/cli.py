"""Command-line entry point.

Subcommands: gen (universes), elicit (fixed-sample submetrics), learn
(generalizing hypotheses), eval (named experiment specs with reports and
figures), serve (human-arbiter HTTP session service).

Exit codes: 0 success, 2 validation error, 3 io error, 4 engine error.
Errors are printed to stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from fairmetric.arbiter import ExactArbiter, LoggingArbiter, TctcArbiter, TctcParams
from fairmetric.elicitation import InconsistentOrderingError, ThresholdSpacingError
from fairmetric.evaluation import ExperimentSpec, SpecInvalidError, run_experiment
from fairmetric.learning import ThresholdSet, submetric_learner, tctc_submetric_learner
from fairmetric.rng import derive_rng
from fairmetric.submetric import measure_overestimate, submetric_to_json
from fairmetric.universe import (
    GroundMetric,
    InvalidParameterError,
    Universe,
    gen_clustered,
    gen_uniform_square,
    random_table_universe,
)

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_ENGINE = 0, 2, 3, 4


def _fail(code: int, kind: str, message: str) -> int:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)
    return code


def _load_universe(path: str) -> Universe:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"universe file not found: {path}")
    return Universe.from_json(p.read_text())


def _tctc_params(args) -> TctcParams:
    return TctcParams(alpha_l=args.alpha_l, alpha_h=args.alpha_h,
                      gray_policy=args.gray_policy, gray_q=args.gray_q,
                      noise_model=args.noise_model, noise_eta=args.noise_eta,
                      noise_sign=args.noise_sign)


def cmd_gen(args) -> int:
    if args.kind == "uniform":
        universe = gen_uniform_square(args.n, args.dim, args.seed)
    elif args.kind == "clustered":
        universe = gen_clustered(args.n, args.clusters, args.spread, args.seed, d=args.dim)
    else:
        universe = random_table_universe(args.n, args.seed)
    Path(args.out).write_text(universe.to_json())
    print(json.dumps({"written": args.out, "n": universe.size, "dim": universe.dimension}))
    return EXIT_OK


def cmd_elicit(args) -> int:
    universe = _load_universe(args.universe)
    rng = derive_rng(args.seed, "experiment-reps")
    idx = rng.choice(universe.size, size=args.reps, replace=False, p=universe.weights)
    reps = [universe.element_at(int(i)) for i in idx]
    if args.mode == "exact":
        inner = ExactArbiter(universe)
    else:
        inner = TctcArbiter(universe, _tctc_params(args), seed=args.seed)
    arb = LoggingArbiter(inner)
    from fairmetric.elicitation import merge_orderings, tctc_merge_orderings, triplet_ordering
    from fairmetric.submetric import merge, rep_submetric
    if args.mode == "exact":
        orderings = [triplet_ordering(arb, universe.elements, r) for r in reps]
        maps = merge_orderings(arb, orderings, args.alpha)
    else:
        maps, _ = tctc_merge_orderings(arb, universe.elements, reps)
    sub = merge([rep_submetric(m) for m in maps])
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "submetric.json").write_text(submetric_to_json(sub))
    (outdir / "ledger.json").write_text(json.dumps(arb.ledger.to_json_dict(), indent=2))
    (outdir / "session.jsonl").write_text(arb.to_jsonl())
    print(json.dumps({"written": str(outdir), "alpha": sub.alpha,
                      "queries": arb.ledger.to_json_dict()}))
    return EXIT_OK


def cmd_learn(args) -> int:
    universe = _load_universe(args.universe)
    ts = ThresholdSet.even_grid(args.granularity)
    if args.mode == "exact":
        arb = ExactArbiter(universe)
        hyp = submetric_learner(arb, universe, args.epsilon, args.delta, args.density_b,
                                ts, seed=args.seed, max_sample=args.sample_cap)
    else:
        arb = TctcArbiter(universe, _tctc_params(args), seed=args.seed)
        hyp = tctc_submetric_learner(arb, universe, args.epsilon, args.delta, args.density_b,
                                     ts, seed=args.seed, max_sample=args.sample_cap)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "hypothesis.json").write_text(hyp.to_json())
    rate = measure_overestimate(hyp, universe, hyp.alpha, n_pairs=args.holdout_pairs,
                                seed=args.seed, exhaustive=universe.size <= 500)
    report = {"heldout_overestimate_rate": rate, "alpha": hyp.alpha,
              "ledger": arb.ledger.to_json_dict(), "meta": hyp.meta}
    (outdir / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True))
    print(json.dumps({"written": str(outdir), "heldout_overestimate_rate": rate}))
    return EXIT_OK


def cmd_eval(args) -> int:
    spec = ExperimentSpec.from_json_file(args.spec)
    report = run_experiment(spec, outdir=args.out, figures=not args.no_figures,
                            jobs=args.jobs)
    for line in report.pass_fail_lines():
        print(line)
    print(json.dumps({"spec": spec.name, "passed": report.passed,
                      "out": str(Path(args.out) / spec.name)}))
    return EXIT_OK


def cmd_serve(args) -> int:
    from fairmetric.service import serve_forever
    universe = _load_universe(args.universe)
    serve_forever(universe, args.host, args.port, state_dir=args.state_dir)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fairmetric",
                                     description="similarity submetrics from comparison queries")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic universe")
    g.add_argument("--kind", choices=["uniform", "clustered", "table"], default="uniform")
    g.add_argument("--n", type=int, default=256)
    g.add_argument("--dim", type=int, default=2)
    g.add_argument("--clusters", type=int, default=4)
    g.add_argument("--spread", type=float, default=0.05)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(fn=cmd_gen)

    def add_tctc_flags(p):
        p.add_argument("--alpha-l", dest="alpha_l", type=float, default=0.02)
        p.add_argument("--alpha-h", dest="alpha_h", type=float, default=0.04)
        p.add_argument("--gray-policy", dest="gray_policy", default="always-answer",
                       choices=["always-answer", "always-tctc", "bernoulli"])
        p.add_argument("--gray-q", dest="gray_q", type=float, default=0.5)
        p.add_argument("--noise-model", dest="noise_model", default="zero",
                       choices=["zero", "uniform", "adversarial-sign"])
        p.add_argument("--noise-eta", dest="noise_eta", type=float, default=0.0)
        p.add_argument("--noise-sign", dest="noise_sign", type=int, default=1)

    e = sub.add_parser("elicit", help="elicit a fixed-sample submetric")
    e.add_argument("--universe", required=True)
    e.add_argument("--mode", choices=["exact", "tctc"], default="exact")
    e.add_argument("--alpha", type=float, default=0.1)
    e.add_argument("--reps", type=int, default=1)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--out", required=True)
    add_tctc_flags(e)
    e.set_defaults(fn=cmd_elicit)

    l = sub.add_parser("learn", help="train a generalizing submetric hypothesis")
    l.add_argument("--universe", required=True)
    l.add_argument("--mode", choices=["exact", "tctc"], default="exact")
    l.add_argument("--epsilon", type=float, default=0.1)
    l.add_argument("--delta", type=float, default=0.1)
    l.add_argument("--density-b", dest="density_b", type=float, default=0.25)
    l.add_argument("--granularity", type=float, default=0.1)
    l.add_argument("--sample-cap", dest="sample_cap", type=int, default=4000)
    l.add_argument("--holdout-pairs", dest="holdout_pairs", type=int, default=10000)
    l.add_argument("--seed", type=int, default=0)
    l.add_argument("--out", required=True)
    add_tctc_flags(l)
    l.set_defaults(fn=cmd_learn)

    v = sub.add_parser("eval", help="run a named experiment spec")
    v.add_argument("--spec", required=True)
    v.add_argument("--out", default="results")
    v.add_argument("--no-figures", action="store_true")
    v.add_argument("--jobs", type=int, default=1)
    v.set_defaults(fn=cmd_eval)

    s = sub.add_parser("serve", help="run the human-arbiter session service")
    s.add_argument("--universe", required=True)
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=8204)
    s.add_argument("--state-dir", dest="state_dir", default=None)
    s.set_defaults(fn=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except FileNotFoundError as exc:
        return _fail(EXIT_IO, "io", str(exc))
    except (json.JSONDecodeError, OSError) as exc:
        return _fail(EXIT_IO, "io", str(exc))
    except (InvalidParameterError, SpecInvalidError, ThresholdSpacingError, ValueError) as exc:
        return _fail(EXIT_VALIDATION, "validation", str(exc))
    except InconsistentOrderingError as exc:
        return _fail(EXIT_ENGINE, "engine", str(exc))
    except Exception as exc:  # engine and unexpected failures
        return _fail(EXIT_ENGINE, "engine", f"{type(exc).__name__}: {exc}")


if __name__ == "__main__":
    sys.exit(main())
