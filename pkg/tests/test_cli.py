import csv
import io
import json

import pytest

from qmanifold import cli, config
from qmanifold.report import ANCHORS, STATUSES, CheckRecord, VerificationReport, below, timed
from qmanifold.suites import SuiteConfig, convergence_sweep, parse_manifold, run_suite


def run(args, capsys):
    code = cli.main(args)
    out, err = capsys.readouterr()
    return code, out, err


# configuration -------------------------------------------------------------


def test_tolerance_overrides_are_scoped():
    base = config.get().chart_tol
    with config.using(chart_tol=1e-4):
        assert config.get().chart_tol == 1e-4
    assert config.get().chart_tol == base


def test_tolerances_must_be_positive():
    with pytest.raises(ValueError):
        with config.using(fiber_tol=-1.0):
            pass
    with pytest.raises(TypeError):
        config.DEFAULT.replace(unknown=1.0)


# report -----------------------------------------------------------------------


def test_check_record_validation():
    with pytest.raises(ValueError):
        CheckRecord("x", "plumbing", "maybe", 0.0, 1.0)
    with pytest.raises(KeyError):
        CheckRecord("x", "no-such-anchor", "pass", 0.0, 1.0)
    assert CheckRecord("x", "tau", "pass", 0.0, 1.0).anchor == ANCHORS["tau"]


def test_timed_turns_exceptions_into_failures():
    def boom():
        raise RuntimeError("bad")

    (rec,) = timed("t.boom", "plumbing", boom)
    assert rec.failed and "RuntimeError" in rec.detail
    assert json.loads(VerificationReport("v", {}, [rec]).to_json())["checks"][0]["residual"] == "nan"


def test_report_sorted_and_counted():
    recs = [below("b", "plumbing", 2.0, 1.0), below("a", "plumbing", 0.0, 1.0)]
    rep = VerificationReport("v", {"seed": 1}, recs)
    doc = rep.to_dict()
    assert [c["check_id"] for c in doc["checks"]] == ["a", "b"]
    assert doc["summary"] == {"total": 2, "failed": 1}
    assert doc["schema_version"] == "1.0"
    assert not rep.passed


# suites ---------------------------------------------------------------------


def test_parse_manifold():
    assert parse_manifold("euclidean") == ("euclidean", 1)
    assert parse_manifold("euclidean(2)") == ("euclidean", 2)
    assert parse_manifold("circle") == ("circle", 1)
    for bad in ("circle(2)", "sphere", "euclidean(x)"):
        with pytest.raises(ValueError):
            parse_manifold(bad)


def test_suite_config_validation():
    with pytest.raises(ValueError):
        SuiteConfig(suite="nope").validate()
    with pytest.raises(ValueError):
        SuiteConfig(tolerances={"chart_tol": 0.0}).validate()


def test_suite_is_deterministic():
    cfg = dict(suite="bundle", degree=16, samples=3, seed=11)
    a, b = run_suite(SuiteConfig(**cfg)), run_suite(SuiteConfig(**cfg))
    strip = lambda rep: [(r.check_id, r.status, r.residual, r.detail) for r in rep.sorted_checks()]  # noqa: E731
    assert strip(a) == strip(b)
    assert a.config["seed"] == 11


def test_every_record_carries_a_known_anchor():
    rep = run_suite(SuiteConfig(suite="atlas-circle", samples=3, seed=2))
    assert rep.checks and all(r.anchor in ANCHORS.values() for r in rep.checks)
    assert all(r.status in STATUSES for r in rep.checks)


def test_small_degree_translation_suite_rejects_plans():
    rep = run_suite(SuiteConfig(suite="translation", degree=4, samples=4, seed=7))
    rejected = [r for r in rep.checks if r.failed and "PlanRejected" in r.detail]
    assert rejected and not rep.passed


def test_sweeps():
    rows = convergence_sweep("tau-roundtrip", [8, 16, 32, 48])
    residuals = [r for _, r, _ in rows]
    assert all(b <= a + 1e-13 for a, b in zip(residuals, residuals[1:]))
    assert residuals[-1] < 1e-9
    rows = convergence_sweep("section-expectation", [8, 16, 24, 32, 48])
    residuals = [r for _, r, _ in rows]
    assert all(b <= a + 1e-13 for a, b in zip(residuals, residuals[1:]))
    assert len(convergence_sweep("section-expectation", [16])) == 1
    with pytest.raises(ValueError):
        convergence_sweep("nope", [8])


# command line ------------------------------------------------------------------


def test_verify_pass_writes_report(tmp_path, capsys):
    out = tmp_path / "report.json"
    code, _, err = run(["verify", "--suite", "model-space", "--seed", "3", "--out", str(out)], capsys)
    assert code == 0 and "PASS" in err
    doc = json.loads(out.read_text())
    assert doc["config"]["seed"] == 3 and doc["summary"]["failed"] == 0


def test_verify_failure_exit_code(capsys):
    code, out, err = run(["verify", "--suite", "translation", "--degree", "4", "--samples", "3"], capsys)
    assert code == 1 and "PlanRejected" in err
    assert json.loads(out)["summary"]["failed"] > 0


def test_verify_csv_and_tolerance_flag(capsys):
    code, out, _ = run(["verify", "--suite", "model-space", "--format", "csv", "--tol.chart_tol=1e-6",
                        "--tol.fiber_tol", "1e-8"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows and {r["status"] for r in rows} == {"pass"}


def test_env_default_degree(monkeypatch, capsys):
    monkeypatch.setenv("QM_DEFAULT_DEGREE", "12")
    code, out, _ = run(["verify", "--suite", "model-space"], capsys)
    assert code == 0 and json.loads(out)["config"]["degree"] == 12
    monkeypatch.setenv("QM_DEFAULT_DEGREE", "zero")
    assert run(["verify", "--suite", "model-space"], capsys)[0] == 2


@pytest.mark.parametrize("args", [
    ["verify", "--suite", "unknown"],
    ["verify", "--tol.nonsense", "1"],
    ["verify", "--tol.chart_tol", "abc"],
    ["verify", "--tol.chart_tol", "-1"],
    ["verify", "--manifold", "torus"],
    ["verify", "--out", "/nonexistent-dir/r.json"],
    ["sweep", "--check", "tau-roundtrip", "--degrees", "8,x"],
    ["frobnicate"],
    [],
])
def test_usage_errors(args, capsys):
    assert run(args, capsys)[0] == 2


def test_config_file_batch(tmp_path, capsys):
    cfg = tmp_path / "suite.json"
    cfg.write_text(json.dumps({"runs": [{"suite": "model-space", "degree": 8, "seed": 1},
                                        {"suite": "expectation", "degree": 32, "samples": 3,
                                         "tolerances": {"chart_tol": 1e-7}}]}))
    code, _, err = run(["verify", "--config", str(cfg), "--format", "csv"], capsys)
    assert code == 0 and err.count("PASS") == 2
    cfg.write_text(json.dumps({"suite": "model-space", "colour": "blue"}))
    assert run(["verify", "--config", str(cfg)], capsys)[0] == 2


def test_sweep_command(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    code, _, _ = run(["sweep", "--check", "section-expectation", "--degrees", "8,16,32", "--out", str(out)], capsys)
    assert code == 0
    rows = list(csv.DictReader(out.open()))
    assert [int(r["K"]) for r in rows] == [8, 16, 32]
    code, text, _ = run(["sweep", "--check", "tau-roundtrip", "--degrees", "16", "--format", "json"], capsys)
    assert code == 0 and len(json.loads(text)) == 1


def test_describe(capsys):
    code, out, _ = run(["describe"], capsys)
    assert code == 0 and "atlas-circle" in out and "Qbar(T_x f) = Qbar(f) + x" in out
    code, out, _ = run(["describe", "--format", "json"], capsys)
    doc = json.loads(out)
    assert set(doc) >= {"model-space", "all"}
