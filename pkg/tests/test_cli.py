import csv
import json

import pytest

from loadagg import __version__
from loadagg.cli import main
from loadagg.config import RunConfig

SMALL = {
    "root_seed": 3,
    "classes": ["residential", "sme"],
    "levels": {"residential": [1, 3], "sme": [1, 2]},
    "families": ["linear"],
    "horizons": [2],
    "n_lags": 48,
    "s_groups": 2,
    "weekday_mode": True,
    "grids": {"linear": {"ridge_lambda": [0.0, 1.0]}},
    "apen": {"window": 480},
    "synth": {"n_residential": 4, "n_sme": 3, "n_days": 20},
    "diffcmp": {"n_meters": 2, "n_days": 20},
}


@pytest.fixture
def cfg_path(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(SMALL))
    return p


def run(cmd, cfg, out, *extra):
    return main([cmd, "--config", str(cfg), "--out", str(out), "--quiet", *extra])


def manifest(out, cmd):
    return json.loads((out / f"manifest_{cmd}.json").read_text())


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_full_pipeline(tmp_path, cfg_path):
    raw = tmp_path / "raw"
    assert run("synth", cfg_path, raw) == 0
    assert {"readings.txt", "classes.csv"} <= {p.name for p in raw.iterdir()}

    assert run("ingest", cfg_path, tmp_path / "ing", "--input", str(raw)) == 0
    report = json.loads((tmp_path / "ing" / "ingest_report.json").read_text())
    assert report

    clean = tmp_path / "clean"
    assert run("clean", cfg_path, clean, "--input", str(raw)) == 0
    rep = json.loads((clean / "cleaning_report.json").read_text())
    assert rep["meters_kept"] == 7
    assert (clean / "cleaned_residential.csv").exists() and (clean / "cleaned_sme.csv").exists()

    for cmd in ("aggregate", "apen", "forecast", "aec"):
        out = tmp_path / cmd
        assert run(cmd, cfg_path, out, "--input", str(clean)) == 0, cmd
        m = manifest(out, cmd)
        assert m["status"] == "ok" and m["exit_code"] == 0 and m["version"] == __version__
        for name, digest in m["artifacts"].items():
            assert (out / name).exists() and len(digest) == 64
        assert RunConfig.from_dict(m["config"]) == RunConfig.load(cfg_path).replace(
            out_dir=str(out), input=str(clean))

    curve = rows(tmp_path / "apen" / "apen_curve.csv")
    assert len(curve) == 2 * 2 + 2 * 2
    aec = rows(tmp_path / "aec" / "aec.csv")
    assert [(r["class"], r["level"]) for r in aec] == [("residential", "1"), ("residential", "3"),
                                                      ("sme", "1"), ("sme", "2")]
    fc = rows(tmp_path / "forecast" / "forecast_metrics.csv")
    assert fc and all(float(r["nmae"]) >= 0 for r in fc)


def test_synthetic_corpus_when_no_input(tmp_path, cfg_path):
    assert run("apen", cfg_path, tmp_path / "a") == 0
    assert run("diffcmp", cfg_path, tmp_path / "d") == 0
    d = rows(tmp_path / "d" / "diffcmp.csv")
    assert len(d) == 2 and list(d[0]) == ["meter_id", "nmae_raw", "nmae_diff"]


def test_rerun_is_byte_identical(tmp_path, cfg_path):
    for i in range(2):
        assert run("synth", cfg_path, tmp_path / f"s{i}") == 0
        assert run("aec", cfg_path, tmp_path / f"a{i}") == 0
    for name in ("readings.txt", "classes.csv"):
        assert (tmp_path / "s0" / name).read_bytes() == (tmp_path / "s1" / name).read_bytes()
    for name in ("aec.csv", "aec_cells.csv", "manifest_aec.json"):
        a = (tmp_path / "a0" / name).read_bytes()
        b = (tmp_path / "a1" / name).read_bytes()
        assert a.replace(b"/a0", b"/a1") == b, name


def test_apen_single_meter(tmp_path):
    cfg = tmp_path / "one.json"
    cfg.write_text(json.dumps({"classes": ["residential"], "levels": {"residential": [1]},
                               "s_groups": 1, "synth": {"n_residential": 1, "n_sme": 0,
                                                        "n_days": 5}}))
    assert run("synth", cfg, tmp_path / "raw") == 0
    assert run("apen", cfg, tmp_path / "out", "--input", str(tmp_path / "raw")) == 0
    assert len(rows(tmp_path / "out" / "apen_curve.csv")) == 1


def test_missing_input_exit_code_and_no_partial_artifacts(tmp_path, cfg_path):
    out = tmp_path / "out"
    assert run("forecast", cfg_path, out, "--input", str(tmp_path / "nope")) == 3
    assert sorted(p.name for p in out.iterdir()) == ["manifest_forecast.json"]
    m = manifest(out, "forecast")
    assert m["status"] == "input_error" and m["artifacts"] == {}
    assert run("ingest", cfg_path, tmp_path / "o2") == 3


def test_config_errors_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"n_lagz": 3}))
    assert run("aec", bad, tmp_path / "o") == 2
    assert manifest(tmp_path / "o", "aec")["status"] == "config_error"
    bad.write_text("[")
    assert run("aec", bad, tmp_path / "o") == 2
    assert main(["aec", "--config", str(tmp_path / "absent.json"), "--out",
                 str(tmp_path / "o"), "--quiet"]) == 2
    assert main(["aec", "--threads", "-1", "--out", str(tmp_path / "o"), "--quiet"]) == 2


def test_runtime_error_exit_4(tmp_path, cfg_path):
    doc = dict(SMALL, n_lags=100_000, families=["linear"])
    cfg = tmp_path / "big.json"
    cfg.write_text(json.dumps(doc))
    assert run("forecast", cfg, tmp_path / "o") == 4
    assert manifest(tmp_path / "o", "forecast")["status"] == "runtime_error"


def test_flags_override_config(tmp_path, cfg_path):
    assert run("synth", cfg_path, tmp_path / "a", "--seed", "99", "--threads", "0") == 0
    m = manifest(tmp_path / "a", "synth")
    assert m["config"]["root_seed"] == 99 and m["config"]["threads"] == 0
    assert m["config"]["out_dir"] == str(tmp_path / "a")


def test_weekend_only_test_days_fail_clearly(tmp_path):
    # 14 days from a Monday: the single test day is a Sunday
    doc = dict(SMALL, classes=["sme"], synth={"n_residential": 0, "n_sme": 2, "n_days": 14})
    cfg = tmp_path / "wk.json"
    cfg.write_text(json.dumps(doc))
    assert run("forecast", cfg, tmp_path / "o") == 4
    assert "weekday" in manifest(tmp_path / "o", "forecast")["error"]
