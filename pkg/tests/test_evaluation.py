import json
from pathlib import Path

import numpy as np
import pytest

from fairmetric.arbiter import ExactArbiter
from fairmetric.elicitation import merge_orderings, triplet_ordering
from fairmetric.evaluation import (
    ExperimentSpec,
    SizeExceededError,
    SpecInvalidError,
    brute_force_submetric,
    doubling_csv,
    doubling_experiment,
    run_experiment,
    write_report,
)
from fairmetric.submetric import merge, rep_submetric
from fairmetric.universe import gen_uniform_square

SPEC_DIR = Path(__file__).resolve().parents[1] / "specs"


def test_brute_force_full_rep_set_equals_truth(square40):
    sub = brute_force_submetric(square40, square40.elements)
    truth = square40.distance_matrix()
    assert np.allclose(sub.pairwise(square40), truth, atol=1e-9)


def test_brute_force_is_zero_submetric(table60):
    reps = [table60.element_at(i) for i in (0, 5)]
    sub = brute_force_submetric(table60, reps)
    truth = table60.distance_matrix()
    assert np.all(sub.pairwise(table60) <= truth + 1e-9)
    assert sub.alpha == 0.0


def test_brute_force_size_guard():
    u = gen_uniform_square(501, 2, seed=0)
    with pytest.raises(SizeExceededError):
        brute_force_submetric(u, [u.element_at(0)])


def test_elicited_submetric_tracks_oracle(square40):
    alpha = 0.1
    reps = [square40.element_at(i) for i in (0, 9)]
    arb = ExactArbiter(square40)
    orderings = [triplet_ordering(arb, square40.elements, r) for r in reps]
    maps = merge_orderings(arb, orderings, alpha)
    elicited = merge([rep_submetric(m) for m in maps])
    oracle = brute_force_submetric(square40, reps)
    gap = np.abs(elicited.pairwise(square40) - oracle.pairwise(square40))
    assert gap.max() <= alpha + 1e-9


def test_spec_validation():
    with pytest.raises(SpecInvalidError):
        ExperimentSpec(name="x", kind="nope", universe={"kind": "uniform"})
    with pytest.raises(SpecInvalidError):
        ExperimentSpec(name="x", kind="elicit", universe={"kind": "uniform"}, seeds=[])
    with pytest.raises(SpecInvalidError):
        ExperimentSpec(name="x", kind="elicit", mode="tctc",
                       universe={"kind": "uniform"},
                       params={"alpha_l": 0.05, "alpha_h": 0.02})


def test_run_experiment_smoke_and_determinism(tmp_path):
    spec = ExperimentSpec.from_json_file(SPEC_DIR / "exact_smoke.json")
    r1 = run_experiment(spec, outdir=None)
    r2 = run_experiment(spec, outdir=None)
    assert r1.passed
    assert all(row["strict_overestimates"] == 0 for row in r1.per_seed)
    assert r1.to_json() == r2.to_json()


def test_doubling_experiment_table_and_csv():
    spec = ExperimentSpec(name="dbl", kind="doubling",
                          universe={"kind": "uniform", "n": 64, "d": 2},
                          params={"axis": "N", "alpha": 0.1, "n_reps": 1}, seeds=[0, 1])
    table = doubling_experiment(spec, "N", 3)
    assert [row["value"] for row in table] == [64, 128, 256]
    assert "ratio_triplet" in table[1]
    text = doubling_csv(table)
    assert "axis" in text.splitlines()[0]
    with pytest.raises(SpecInvalidError):
        doubling_experiment(spec, "N", 2)
    with pytest.raises(SpecInvalidError):
        doubling_experiment(spec, "sideways", 3)


def test_write_report_files_and_figures(tmp_path):
    spec = ExperimentSpec(name="density_demo", kind="density-diffusion",
                          universe={"kind": "uniform", "n": 120, "d": 2},
                          params={"gamma": 0.2, "b": 0.1, "zeta": 0.3}, seeds=[0])
    report = run_experiment(spec, outdir=tmp_path)
    base = tmp_path / "density_demo"
    assert (base / "report.json").exists()
    assert (base / "report.csv").exists()
    assert (base / "figures" / "density_curve.png").exists()
    doc = json.loads((base / "report.json").read_text())
    assert doc["spec"]["name"] == "density_demo"


def test_report_checks_drive_pass_flag():
    spec = ExperimentSpec(name="tight", kind="density-diffusion",
                          universe={"kind": "uniform", "n": 120, "d": 2},
                          params={"gamma": 0.2, "b": 0.1, "zeta": 0.3,
                                  "target_p": 0.99, "tol_p": 0.001}, seeds=[0])
    report = run_experiment(spec, outdir=None)
    assert not report.passed
    assert any(line.startswith("[FAIL]") for line in report.pass_fail_lines())
