import json
from pathlib import Path

import numpy as np
import pytest

from fairmetric.cli import main
from fairmetric.learning import SubmetricHypothesis
from fairmetric.submetric import submetric_from_json
from fairmetric.universe import Universe

SPEC_DIR = Path(__file__).resolve().parents[1] / "specs"


def run_cli(*argv):
    return main(list(argv))


def test_gen_writes_universe(tmp_path, capsys):
    out = tmp_path / "u.json"
    assert run_cli("gen", "--kind", "uniform", "--n", "32", "--seed", "3",
                   "--out", str(out)) == 0
    doc = json.loads(out.read_text())
    assert len(doc["elements"]) == 32
    assert json.loads(capsys.readouterr().out)["n"] == 32


def test_gen_validation_error(tmp_path, capsys):
    code = run_cli("gen", "--kind", "uniform", "--n", "1", "--out", str(tmp_path / "u.json"))
    assert code == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "validation"


def test_elicit_missing_universe(tmp_path, capsys):
    code = run_cli("elicit", "--universe", str(tmp_path / "missing.json"),
                   "--out", str(tmp_path / "o"))
    assert code == 3
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "io"
    assert "not found" in err["message"]


def test_gen_elicit_round_trip(tmp_path, capsys):
    upath = tmp_path / "u.json"
    run_cli("gen", "--n", "48", "--seed", "1", "--out", str(upath))
    outdir = tmp_path / "elicit"
    assert run_cli("elicit", "--universe", str(upath), "--alpha", "0.1",
                   "--reps", "2", "--seed", "5", "--out", str(outdir)) == 0
    sub = submetric_from_json((outdir / "submetric.json").read_text())
    universe = Universe.from_json(upath.read_text())
    truth = universe.distance_matrix()
    assert np.all(sub.pairwise(universe) <= truth + 0.1 + 1e-9)
    ledger = json.loads((outdir / "ledger.json").read_text())
    assert ledger["triplet"] > 0
    log_lines = (outdir / "session.jsonl").read_text().splitlines()
    assert len(log_lines) == ledger["real"] + ledger["triplet"] + ledger["quad"]


def test_elicit_tctc_flags(tmp_path):
    upath = tmp_path / "u.json"
    run_cli("gen", "--n", "48", "--dim", "1", "--seed", "2", "--out", str(upath))
    outdir = tmp_path / "tctc"
    assert run_cli("elicit", "--universe", str(upath), "--mode", "tctc",
                   "--alpha-l", "0.02", "--alpha-h", "0.04",
                   "--noise-model", "adversarial-sign", "--noise-eta", "0.03",
                   "--out", str(outdir)) == 0
    sub = submetric_from_json((outdir / "submetric.json").read_text())
    assert sub.alpha == pytest.approx(0.16)


def test_learn_then_measure_round_trip(tmp_path, capsys):
    upath = tmp_path / "u.json"
    run_cli("gen", "--n", "400", "--seed", "4", "--out", str(upath))
    outdir = tmp_path / "learn"
    assert run_cli("learn", "--universe", str(upath), "--epsilon", "0.2",
                   "--delta", "0.2", "--density-b", "0.5", "--granularity", "0.2",
                   "--sample-cap", "300", "--seed", "6", "--out", str(outdir)) == 0
    printed = json.loads(capsys.readouterr().out.splitlines()[-1])
    report = json.loads((outdir / "report.json").read_text())
    # measurements recomputed from the serialized hypothesis must agree
    hyp = SubmetricHypothesis.from_json((outdir / "hypothesis.json").read_text())
    universe = Universe.from_json(upath.read_text())
    from fairmetric.submetric import measure_overestimate
    rate = measure_overestimate(hyp, universe, hyp.alpha, exhaustive=True)
    assert rate == pytest.approx(report["heldout_overestimate_rate"])
    assert printed["heldout_overestimate_rate"] == pytest.approx(rate)


def test_eval_bundled_smoke_spec(tmp_path, capsys):
    assert run_cli("eval", "--spec", str(SPEC_DIR / "exact_smoke.json"),
                   "--out", str(tmp_path), "--no-figures") == 0
    out = capsys.readouterr().out
    assert "[PASS]" in out
    assert (tmp_path / "exact_smoke" / "report.json").exists()


def test_eval_invalid_spec(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"name": "x", "kind": "nope", "universe": {}}))
    assert run_cli("eval", "--spec", str(bad), "--out", str(tmp_path)) == 2
