import json

import pytest

from fracdir.errors import ConfigError
from fracdir.harness.cli import main
from fracdir.harness.ratio import RatioReport
from fracdir.harness.scenario import (COMMAND_SUITES, SCHEMA_VERSION, SUITES, load_scenario,
                                      run_scenario, run_suites, validate_config, verdict_bytes)

BALL = {"kind": "ball", "center": [0.0], "radius": 1.0}


def _cfg(**kw):
    cfg = {"domain": BALL, "params": {"d": 1, "alpha": 1.0}, "mc": {"paths": 20_000, "seed": 1}}
    cfg.update(kw)
    return cfg


def test_minimal_config_yields_ratio_reports():
    scn = load_scenario(_cfg(suites=["kernel-bounds"]))
    res = run_suites(scn)
    reports = [c for r in res for c in r.checks if isinstance(c, RatioReport)]
    assert len(reports) >= 3
    assert all(c.passed for c in reports if c.asserted)


def test_report_layout_and_csv(tmp_path):
    rep = run_scenario(_cfg(suites=["delta", "zero-exterior"]), tmp_path)
    assert rep["schema_version"] == SCHEMA_VERSION
    assert rep["verdicts"]["overall"] == "pass"
    on_disk = json.loads((tmp_path / "report.json").read_text())
    assert on_disk["verdicts"] == rep["verdicts"]
    for name in ("delta", "zero-exterior"):
        lines = (tmp_path / f"{name}.csv").read_text().splitlines()
        assert lines[0].startswith("check,") and len(lines) > 2


def test_seed_determinism(tmp_path):
    cfg = _cfg(suites=["exit-law"], params={"d": 1, "alpha": [0.5, 1.5]})
    a = run_scenario(cfg, tmp_path / "a", seed=4, paths=20_000)
    b = run_scenario(cfg, tmp_path / "b", seed=4, paths=20_000)
    assert verdict_bytes(a) == verdict_bytes(b)
    assert (tmp_path / "a" / "exit-law.csv").read_bytes() == (tmp_path / "b" / "exit-law.csv").read_bytes()


@pytest.mark.parametrize("bad", [
    {"domain": BALL},
    {"domain": {"kind": "torus"}, "params": {"d": 1, "alpha": 1.0}},
    {"domain": BALL, "params": {"d": 1, "alpha": 2.5}},
    {"domain": BALL, "params": {"d": 1, "alpha": 1.0}, "suites": ["no-such-suite"]},
    {"domain": BALL, "params": {"d": 1, "alpha": 1.0}, "extra": 1},
])
def test_schema_errors(bad):
    with pytest.raises(ConfigError):
        load_scenario(bad)


def test_hypothesis_violation_needs_falsify(tmp_path):
    cfg = _cfg(params={"d": 1, "alpha": 1.0, "theta": 0.0, "sigma": -3.0}, suites=["zero-exterior"])
    with pytest.raises(ConfigError, match="theta"):
        load_scenario(cfg)
    rep = run_scenario(cfg, tmp_path, falsify=True)
    assert rep["hypotheses"]["violations"]
    checks = [c for s in rep["verdicts"]["suites"].values() for c in s["checks"]]
    assert checks and not any(c["asserted"] for c in checks)


def test_dimension_mismatch_rejected():
    with pytest.raises(ConfigError):
        load_scenario(_cfg(params={"d": 2, "alpha": 1.0}))


def test_every_command_maps_to_known_suites():
    for suites in COMMAND_SUITES.values():
        assert set(suites) <= set(SUITES)


def test_cli_exit_codes(tmp_path, capsys):
    good = tmp_path / "good.json"
    good.write_text(json.dumps(_cfg(problem={"type": "elliptic",
                                             "g": {"type": "bump", "center": [2.0], "radius": 0.5}})))
    out = tmp_path / "out"
    assert main(["solve-elliptic", "--config", str(good), "--out", str(out), "--seed", "3"]) == 0
    assert (out / "report.json").exists()
    assert "overall: pass" in capsys.readouterr().out
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"domain": BALL, "params": {"d": 1, "alpha": 3.0}}))
    assert main(["verify-kernels", "--config", str(bad), "--out", str(out)]) == 2
    with pytest.raises(SystemExit):
        main(["no-such-command", "--config", str(good)])


def test_cli_reports_failure(tmp_path, monkeypatch):
    import fracdir.harness.cli as cli

    def failing(*a, **k):
        return {"verdicts": {"overall": "fail", "asserted": 1, "suites": {}}}
    monkeypatch.setattr(cli, "run_scenario", failing)
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(_cfg()))
    assert cli.main(["norms", "--config", str(cfg)]) == 1


def test_schema_error_names_entry():
    with pytest.raises(ConfigError, match="params/alpha"):
        validate_config({"domain": BALL, "params": {"d": 1, "alpha": 2.5}})
