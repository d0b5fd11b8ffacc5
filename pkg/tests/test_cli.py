import json
import subprocess
import sys

import numpy as np
import pytest

from vnauq.cli import main
from vnauq.formats import dumps
from vnauq.montecarlo import DistributionSummary
from vnauq.report import FrequencySimulation, SimulationResult, read_posteriors, read_report, write_simulation
from vnauq.scenario import TYPICAL_KIT

SEED_FIELDS = {"seed"}
RESULT_SEED_FIELDS = {"mc_prior", "posterior", "beta", "discard_count"}


@pytest.fixture
def pipe(fixtures_dir):
    d = fixtures_dir / "pipeline"
    return {k: str(d / f) for k, f in [("scenario", "scenario.json"), ("sources", "sources.csv"), ("aut", "aut.csv")]} | {
        "golden": d / "golden_report.json"
    }


def quiet_scenario(tmp_path, **extra):
    beliefs = {n: {"mean": b.mean, "std": abs(b.mean) * 1e-15 or 1e-30} for n, b in TYPICAL_KIT.items()}
    for n in ("load.residual_mag", "rcc_mag", "noise_floor_mag"):
        beliefs[n] = {"mean": 0.0, "std": 1e-30}
    doc = {
        "frequencies": [1e9, 2e9],
        "kit": None,
        "beliefs": beliefs,
        "dut": {"s11_db": -30},
        "draws": 200,
        "seed": 5,
    } | extra
    path = tmp_path / "quiet.json"
    path.write_text(json.dumps(doc))
    return str(path)


# --- fuse --------------------------------------------------------------------


def test_fuse_without_samples_passes_priors_through(pipe, tmp_path):
    out = tmp_path / "post.json"
    assert main(["fuse", "--scenario", pipe["scenario"], "--out", str(out)]) == 0
    sources = read_posteriors(out.read_text())
    assert all(s.pass_through and s.prior == s.posterior and s.n == 0 for s in sources)
    assert {s.name for s in sources} == set(TYPICAL_KIT)


def test_fuse_with_fifty_samples_shrinks_the_belief(pipe, tmp_path):
    out = tmp_path / "post.json"
    assert main(["fuse", "--scenario", pipe["scenario"], "--sources", pipe["sources"], "--out", str(out)]) == 0
    fused = {s.name: s for s in read_posteriors(out.read_text())}
    assert fused["open.c0"].n == 50 and not fused["open.c0"].pass_through
    assert fused["open.c0"].posterior.std < fused["open.c0"].prior.std
    assert fused["open.c1"].pass_through


def test_fuse_duplicate_source_is_a_fuse_error(pipe, capsys):
    code = main(["fuse", "--scenario", pipe["scenario"], "--sources", pipe["sources"], pipe["sources"]])
    assert code == 2
    assert "more than one file" in capsys.readouterr().err


def test_fuse_degenerate_samples_name_the_source(pipe, tmp_path, capsys):
    csv = tmp_path / "flat.csv"
    csv.write_text("tcc_mag\n1\n1\n1\n")
    assert main(["fuse", "--scenario", pipe["scenario"], "--sources", str(csv)]) == 2
    assert "tcc_mag" in capsys.readouterr().err


def test_fuse_unparsable_samples_are_io_errors(pipe, tmp_path, capsys):
    csv = tmp_path / "bad.csv"
    csv.write_text("tcc_mag\n1\nx\n")
    assert main(["fuse", "--scenario", pipe["scenario"], "--sources", str(csv)]) == 5
    assert "line 3" in capsys.readouterr().err


# --- simulate ----------------------------------------------------------------


def test_simulate_zero_uncertainty(tmp_path):
    out = tmp_path / "sim.json"
    assert main(["simulate", "--scenario", quiet_scenario(tmp_path), "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    for entry in doc["frequencies"]:
        assert entry["summary"]["variance"] < 1e-20
        assert entry["summary"]["mean"] == pytest.approx(-30.0, abs=1e-9)
        assert sum(entry["histogram"]["counts"]) == 200


def test_simulate_is_deterministic(tmp_path):
    scenario = quiet_scenario(tmp_path)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        assert main(["simulate", "--scenario", scenario, "--out", str(out), "--draws", "500"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_simulate_real_kit_shows_asymmetry(pipe, tmp_path):
    out = tmp_path / "sim.json"
    assert main(["simulate", "--scenario", pipe["scenario"], "--draws", "1000", "--out", str(out)]) == 0
    for entry in json.loads(out.read_text())["frequencies"]:
        s = entry["summary"]
        assert abs(s["skewness"]) > 2 * s["skew_std_error"]
        assert len(entry["histogram"]["counts"]) == 30


def test_simulate_coverage_error(pipe, tmp_path):
    post = tmp_path / "post.json"
    assert main(["fuse", "--scenario", pipe["scenario"], "--out", str(post)]) == 0
    doc = json.loads(post.read_text())
    doc["sources"] = [s for s in doc["sources"] if s["source"] != "tcc_mag"]
    post.write_text(dumps(doc))
    assert main(["simulate", "--scenario", pipe["scenario"], "--posteriors", str(post)]) == 3


def test_simulate_excessive_discards_exit_code(tmp_path):
    path = tmp_path / "lossy.json"
    doc = {
        "frequencies": [1e9],
        "beliefs": {"load.residual_mag": {"mean": 0.1, "std": 0.01}},
        "dut": {"s11_db": -30},
        "draws": 1000,
    }
    path.write_text(json.dumps(doc))
    assert main(["simulate", "--scenario", str(path)]) == 3


# --- evaluate ----------------------------------------------------------------


def _tiny_simulation(tmp_path, skew_se):
    summary = DistributionSummary(-30.0, 0.25, -0.4, skew_se, 10_000)
    sim = SimulationResult(1, 10_000, "db", [], [FrequencySimulation(1e9, summary, 0)])
    path = tmp_path / "sim.json"
    path.write_text(write_simulation(sim))
    return str(path)


def _aut(tmp_path, n, seed=0, labels=("1000000000",)):
    rng = np.random.default_rng(seed)
    rows = "\n".join(",".join(f"{v:.17g}" for v in row) for row in rng.normal(-30.2, 0.5, (n, len(labels))))
    path = tmp_path / "aut.csv"
    path.write_text(",".join(labels) + "\n" + rows + "\n")
    return str(path)


def test_evaluate_zero_skew_error_keeps_prior_skewness(tmp_path):
    out = tmp_path / "rep.json"
    assert main(["evaluate", "--prior", _tiny_simulation(tmp_path, 0.0), "--aut", _aut(tmp_path, 50), "--out", str(out)]) == 0
    (r,) = read_report(out.read_text()).results
    assert r.posterior_skewness == -0.4
    assert r.beta == (0.0, 0.0, 0.0)
    assert r.posterior_variance < 0.25


def test_evaluate_grid_mismatch(tmp_path):
    sim = _tiny_simulation(tmp_path, 0.02)
    assert main(["evaluate", "--prior", sim, "--aut", _aut(tmp_path, 50, labels=("2000000000",))]) == 4
    assert main(["evaluate", "--prior", sim, "--aut", _aut(tmp_path, 50, labels=("1e9", "2e9"))]) == 4
    assert main(["evaluate", "--prior", sim, "--aut", _aut(tmp_path, 50, labels=("x",)), "--aut-columns", "order"]) == 0


def test_evaluate_missing_prior_is_io(tmp_path):
    assert main(["evaluate", "--prior", str(tmp_path / "nope.json"), "--aut", _aut(tmp_path, 5)]) == 5


# --- pipeline ----------------------------------------------------------------


def _pipeline(pipe, out, *extra):
    return main(
        ["pipeline", "--scenario", pipe["scenario"], "--sources", pipe["sources"], "--aut", pipe["aut"], "--out", str(out), *extra]
    )


def test_pipeline_matches_golden_report(pipe, tmp_path):
    out = tmp_path / "report.json"
    assert _pipeline(pipe, out) == 0
    assert out.read_bytes() == pipe["golden"].read_bytes()


def test_golden_report_shrinks_variance(pipe):
    report = read_report(pipe["golden"].read_text())
    assert len(report.results) == 13
    for r in report.results:
        assert r.aut_n == 50
        assert r.posterior_variance < r.mc_prior.variance


def test_pipeline_composes_the_subcommands(pipe, tmp_path):
    post, sim, rep = tmp_path / "p.json", tmp_path / "s.json", tmp_path / "r.json"
    assert main(["fuse", "--scenario", pipe["scenario"], "--sources", pipe["sources"], "--out", str(post)]) == 0
    assert main(["simulate", "--scenario", pipe["scenario"], "--posteriors", str(post), "--out", str(sim)]) == 0
    assert main(["evaluate", "--prior", str(sim), "--aut", pipe["aut"], "--out", str(rep)]) == 0
    assert rep.read_bytes() == pipe["golden"].read_bytes()


def test_pipeline_missing_scenario_exits_before_work(pipe, tmp_path, capsys):
    out = tmp_path / "never.json"
    code = main(["pipeline", "--scenario", str(tmp_path / "missing.json"), "--aut", pipe["aut"], "--out", str(out)])
    assert code == 5
    assert not out.exists()
    assert "not found" in capsys.readouterr().err


def test_pipeline_bad_aut_fails_before_work(pipe, tmp_path):
    bad = tmp_path / "aut.csv"
    bad.write_text("1e9\n-30\n")
    out = tmp_path / "never.json"
    assert _pipeline({**pipe, "aut": str(bad)}, out) == 5
    assert not out.exists()


def test_seed_override_changes_only_seed_dependent_fields(pipe, tmp_path):
    out = tmp_path / "other.json"
    assert _pipeline(pipe, out, "--seed", "99") == 0
    base = json.loads(pipe["golden"].read_text())
    other = json.loads(out.read_text())
    assert other["seed"] == 99
    for key in base:
        if key not in SEED_FIELDS | {"results"}:
            assert other[key] == base[key], key
    for a, b in zip(base["results"], other["results"]):
        for key in a:
            if key not in RESULT_SEED_FIELDS:
                assert a[key] == b[key], key
        assert a["mc_prior"] != b["mc_prior"]


def test_usage_errors_exit_one(capsys):
    assert main(["fuse"]) == 1
    assert main(["bogus"]) == 1
    assert main(["simulate", "--scenario", "x.json", "--seed", "-1"]) == 1


def test_console_script_entry_point(pipe):
    proc = subprocess.run(
        [sys.executable, "-m", "vnauq.cli", "fuse", "--scenario", pipe["scenario"]],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["format"] == "vnauq-posteriors"
