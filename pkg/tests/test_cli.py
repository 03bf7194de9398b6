import json

from nilrect import __version__
from nilrect.cli import (CONFIG_SCHEMA, DEFAULTS, canonical_json, config_hash, load_config, main,
                         render_reports)


def run(tmp_path, *argv):
    return main(["--out", str(tmp_path), *argv])


def report(tmp_path, cmd):
    return json.loads((tmp_path / f"{cmd}.json").read_text())


def test_nilp_second_heisenberg(tmp_path):
    assert run(tmp_path, "nilp", "--example", "example5", "--point", "1,0,0,0,0") == 0
    rep = report(tmp_path, "nilp")
    assert rep["result"]["fingerprint"]["pairing_rank"] == 4
    assert rep["result"]["growth"] == [4, 5]
    assert rep["version"] == __version__
    assert rep["config_hash"] == config_hash(rep["config"])


def test_iso_orbit(tmp_path):
    assert run(tmp_path, "iso", "--family", "e147", "--xi", "0.1", "--eta", "10") == 0
    res = report(tmp_path, "iso")["result"]
    assert res["verdict"] == "True" and res["residual"] == 0.0


def test_flag_martinet(tmp_path):
    assert run(tmp_path, "flag", "--example", "martinet", "--points", "grid") == 0
    res = report(tmp_path, "flag")["result"]
    assert res["verdict"] == "NotEquiregular"
    growths = {tuple(w["growth"]) for w in res["witnesses"]}
    assert growths == {(2, 3), (2, 2, 3)}


def test_deterministic_reports(tmp_path):
    # the output directory is part of the config, so rerun in place
    argv = ("nilp", "--example", "heis2", "--point", "0,0,0,0,0")
    assert run(tmp_path, *argv) == 0
    first = (tmp_path / "nilp.json").read_bytes()
    assert run(tmp_path, *argv) == 0
    assert (tmp_path / "nilp.json").read_bytes() == first
    assert (tmp_path / "nilp.meta.json").is_file()


def test_group_round_trip_check(tmp_path):
    assert run(tmp_path, "--strict", "group", "--group", "heis1") == 0
    assert report(tmp_path, "group")["checks"]["round_trip"]["ok"]


def test_math_error_exit_2(tmp_path, capsys):
    assert run(tmp_path, "nilp", "--example", "martinet", "--point", "0,0,0") == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "FlagFailure"


def test_config_errors_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"depht": 3}))
    assert run(tmp_path, "--config", str(bad), "nilp") == 1
    assert "depht" in capsys.readouterr().err
    bad.write_text("{not json")
    assert run(tmp_path, "--config", str(bad), "nilp") == 1
    assert run(tmp_path, "nilp", "--example", "nosuchframe") == 1


def test_strict_exit_3(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"expect": {"verdict": "Equiregular"}}))
    argv = ["--config", str(cfg), "flag", "--example", "martinet", "--points", "grid"]
    assert run(tmp_path, *argv) == 0
    assert run(tmp_path, "--strict", *argv) == 3
    assert not report(tmp_path, "flag")["checks"]["expect_verdict"]["ok"]


def test_config_layering(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"depth": 3, "tau": 0.1}))
    merged = load_config(cfg, {"tau": 0.2})
    assert merged["depth"] == 3 and merged["tau"] == 0.2
    assert merged["r"] == DEFAULTS["r"]


def test_canonical_json():
    from fractions import Fraction
    s = canonical_json({"b": Fraction(1, 3), "a": float("nan")})
    assert s.index('"a"') < s.index('"b"')
    assert json.loads(s) == {"a": None, "b": "1/3"}


def test_empty_report(tmp_path, capsys):
    assert run(tmp_path, "report") == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["checks"] == [] and summary["failed"] == 0


def _fake(tmp_path, name, command, result, ok=True):
    p = tmp_path / f"{name}.json"
    p.write_text(json.dumps({"command": command, "result": result,
                             "checks": {"c": {"ok": ok, "claim": "x <= y"}}}))
    return p


def test_render_embed_and_cover(tmp_path):
    pairs = [{"e1": 0, "e2": i, "d_T": 0.5, "dG_lo": 1.0, "dG_hi": 1.0, "dM_lo": 1.0,
              "dM_hi": 1.0 + i / 10, "distortion": 1.0 + i / 10} for i in range(1, 9)]
    emb = _fake(tmp_path, "embed", "embed", {"embedding": {"pairs": pairs}})
    cov = _fake(tmp_path, "cover", "cover", {"coverage": [0.0, 0.2, 0.5]}, ok=False)
    summary, text, files = render_reports([emb, cov], tmp_path)
    assert summary["passed"] == 1 and summary["failed"] == 1
    assert files["embed_distortion.svg"].lstrip().startswith("<?xml")
    assert files["embed_pairs.csv"].splitlines()[0].startswith("e1,e2,d_T")
    assert len(files["embed_pairs.csv"].splitlines()) == 9
    assert files["cover_coverage.csv"] == "iteration,coverage\n0,0.0\n1,0.2\n2,0.5\n"
    # SVG output is reproducible
    assert render_reports([emb], tmp_path)[2]["embed_distortion.svg"] == files["embed_distortion.svg"]
    assert "x <= y" in text


def test_render_strict_and_malformed(tmp_path):
    cov = _fake(tmp_path, "cover", "cover", {"coverage": [0.0]}, ok=False)
    assert run(tmp_path, "--strict", "report", str(cov)) == 3
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"command": "cover"}))
    assert run(tmp_path, "report", str(bad)) == 1


def test_module_entry_point():
    import subprocess
    import sys
    out = subprocess.run([sys.executable, "-m", "nilrect", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for cmd in ("flag", "nilp", "iso", "group", "defect", "patchwork", "cantor", "embed",
                "cover", "report"):
        assert cmd in out.stdout


def test_documented_example_config_validates():
    from pathlib import Path
    path = Path(__file__).resolve().parents[1] / "docs" / "example-config.json"
    cfg = load_config(path)
    # the documented example sets every key of the schema
    assert set(cfg) == set(CONFIG_SCHEMA["properties"])
    assert cfg["compare_depths"] == [4, 5]
