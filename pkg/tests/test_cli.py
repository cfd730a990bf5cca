import csv
import json
import os
import subprocess
import sys
import xml.etree.ElementTree as ET

import pytest

from sphavg.cli import main, parse_scales, parse_xs, validate_config, UsageError
from sphavg.output import atomic_write, clean_json, fmt_num


def run(tmp_path, *argv):
    return main(["--out", str(tmp_path), *argv])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


# -- option syntax -----------------------------------------------------------


def test_parse_scales():
    assert parse_scales("2^-4..2^-6") == [1 / 16, 1 / 32, 1 / 64]
    assert parse_scales("2..16") == [2, 4, 8, 16]
    assert parse_scales("1/8, 1/16") == [0.125, 0.0625]
    with pytest.raises(UsageError):
        parse_scales("abc")


def test_parse_xs():
    assert parse_xs("-1:1:0.5") == [-1, -0.5, 0, 0.5]
    assert parse_xs("0,1/2") == [0, 0.5]
    with pytest.raises(UsageError):
        parse_xs("1:0:0.5")


def test_validate_config_pointer_paths():
    with pytest.raises(UsageError) as err:
        validate_config("scaling", {"family": "Q", "n": 2, "point": "0 0 ; 0", "scales": [1, 2, 3, -4]})
    msg = str(err.value)
    assert "/family:" in msg and "/scales/3:" in msg
    cfg = validate_config("scaling", {"family": "B", "n": 2, "point": "0 0 ; 0", "scales": [0.1] * 4})
    assert cfg["tolerance"] == 0.1 and cfg["points_per_window"] == 256


def test_output_formatting():
    assert fmt_num(1 / 3) == "0.333333333333"
    assert fmt_num(float("inf")) == "inf"
    assert clean_json({"a": [float("inf"), 2.0 / 3]}) == {"a": ["inf", 0.666666666667]}


def test_atomic_write_leaves_no_partial_file(tmp_path):
    target = tmp_path / "x.txt"
    atomic_write(target, "old")

    class Boom:
        pass

    with pytest.raises(TypeError):
        atomic_write(target, Boom())
    assert target.read_text() == "old"
    assert sorted(p.name for p in tmp_path.iterdir()) == ["x.txt"]


# -- region / classify -------------------------------------------------------


def test_region_json(tmp_path, capsys):
    assert run(tmp_path, "region", "--n", "2", "--format", "json") == 0
    data = json.loads((tmp_path / "region_n2.json").read_text())
    assert len(data["vertices"]) == 13
    names = {v["name"] for v in data["vertices"]}
    assert {"O", "M", "K", "G'"} <= names
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["outputs"] == ["region_n2.json"]
    assert "13 vertices" in capsys.readouterr().out


def test_region_csv(tmp_path):
    assert run(tmp_path, "region", "--n", "3", "--format", "csv") == 0
    rows = read_csv(tmp_path / "vertices_n3.csv")
    assert len(rows) == 32
    raw = (tmp_path / "vertices_n3.csv").read_bytes()
    assert b"\r\n" not in raw
    assert (tmp_path / "inequalities_n3.csv").exists() and (tmp_path / "duals_n3.csv").exists()


def test_region_slice_svg(tmp_path):
    assert run(tmp_path, "region", "--n", "3", "--slice", "--format", "svg") == 0
    root = ET.parse(tmp_path / "slice_n3.svg").getroot()
    ns = "{http://www.w3.org/2000/svg}"
    labels = [t.text for t in root.iter(ns + "text")]
    for name in ("O", "B", "M", "A", "F"):
        assert name in labels
    assert len(list(root.iter(ns + "polygon"))) == 1


def test_region_projection_svgs(tmp_path):
    assert run(tmp_path, "region", "--n", "2", "--format", "svg") == 0
    for view in ("x1x2", "x1r", "x2r"):
        ET.parse(tmp_path / f"region_n2_{view}.svg")


def test_region_errors(tmp_path, capsys):
    assert run(tmp_path, "region", "--n", "7") == 1
    assert "n=7" in capsys.readouterr().err
    assert run(tmp_path, "region", "--n", "3", "--format", "svg") == 1
    assert "--slice" in capsys.readouterr().err


def test_classify(capsys):
    assert main(["classify", "3/5 3/5 ; 2/5"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["membership"]["member"] and out["classification"]["strong"] == "yes"
    assert main(["classify", "1 1 ; 1"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert not out["membership"]["member"]
    assert out["membership"]["violated"] == ["(iii) k=1,l=2"]
    assert main(["classify", "0 1 ; 1/2"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["classification"]["weak"] == "yes" and out["classification"]["strong"] == "no"


def test_classify_parse_error_position(capsys):
    assert main(["classify", "1/2 0.5 ; 0"]) == 1
    assert "position" in capsys.readouterr().err


# -- experiments -------------------------------------------------------------


def test_eval_profile(tmp_path):
    assert run(tmp_path, "eval", "--function", "indicator:0:2", "--function", "constant:1",
               "--x=-1:1:0.5", "--resolution", "4096") == 0
    rows = read_csv(tmp_path / "profile.csv")
    assert rows[0] == ["x", "value"]
    vals = {float(x): float(v) for x, v in rows[1:]}
    assert vals[0.0] == pytest.approx(0.5, abs=1e-3)


def test_scaling_pass_and_summary(tmp_path, capsys):
    code = run(tmp_path, "scaling", "--family", "B", "--n", "2", "--point", "3/5 3/5 ; 2/5",
               "--eps", "2^-4..2^-9")
    out = capsys.readouterr().out
    assert code == 0
    assert out.startswith("PASS scaling") and "predicted 0" in out
    rep = json.loads((tmp_path / "scaling.json").read_text())
    assert abs(rep["fit"]["slope"]) < 0.05


def test_scaling_fail_exit_code(tmp_path, capsys):
    # a tolerance of 1e-6 cannot be met by a measured slope
    cfg = {"family": "B", "n": 2, "point": "1/2 1/2 ; 1/2", "scales": [2.0**-k for k in range(4, 8)],
           "tolerance": 1e-6}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    assert run(tmp_path / "out", "scaling", "--config", str(path)) == 2
    assert capsys.readouterr().out.startswith("FAIL scaling")


def test_scaling_resolution_error(tmp_path, capsys):
    code = run(tmp_path, "scaling", "--family", "B", "--n", "2", "--point", "3/5 3/5 ; 2/5",
               "--eps", "2^-4..2^-9", "--resolution", "1024")
    assert code == 1
    assert "resolution" in capsys.readouterr().err
    assert not (tmp_path / "scaling.csv").exists()


def test_config_schema_error(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"probe": "E", "ks": [6, 7, "x"], "extra": 1}))
    assert run(tmp_path, "blowup", "--config", str(path)) == 1
    err = capsys.readouterr().err
    assert "/ks/2" in err and "extra" in err


def test_config_and_inline_conflict(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"probe": "E", "ks": [6, 7, 8, 9]}))
    assert run(tmp_path, "blowup", "--config", str(path), "--probe", "G") == 1


def test_blowup_cli(tmp_path, capsys):
    assert run(tmp_path, "blowup", "--probe", "E", "--k", "6..18") == 0
    assert "PASS blowup [E]" in capsys.readouterr().out
    rows = read_csv(tmp_path / "blowup.csv")
    assert rows[0] == ["k", "x", "value", "ratio"] and len(rows) == 14
    assert run(tmp_path / "b", "blowup", "--probe", "E", "--k", "6..18", "--bounded") == 2


def test_decay_cli(tmp_path, capsys):
    assert run(tmp_path, "decay", "--n", "2", "--xi-max", "200", "--resolution", "4096") == 0
    assert capsys.readouterr().out.startswith("PASS decay")
    assert run(tmp_path, "decay", "--n", "2", "--xi-max", "200", "--resolution", "1024") == 1


def test_norms_cli(tmp_path, capsys):
    assert run(tmp_path, "norms", "--function", "powerlog:0:1/2:2/3:9/10", "--lp", "2",
               "--lorentz", "2,2", "--lp", "inf") == 0
    out = capsys.readouterr().out
    assert "L^2 norm = 3.56420" in out
    rows = read_csv(tmp_path / "norms.csv")
    assert rows[2][:2] == ["lp", "inf"] and rows[2][3] == "inf"
    assert run(tmp_path, "norms", "--function", "powerlog:0:1/2:2/3:9/10") == 1


def test_fourier_cli(tmp_path):
    assert run(tmp_path, "fourier", "--n", "2", "--xi", "0,0", "--xi", "0,10", "--resolution", "4096") == 0
    rows = read_csv(tmp_path / "fourier.csv")
    assert rows[0] == ["xi", "re", "im", "abs"]
    assert float(rows[1][1]) == 1.0


def test_usage_errors_exit_1(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["region"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["nosuch"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["scaling", "--family", "Z"])
    assert exc.value.code == 1


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("SPHAVG_OUT", str(tmp_path / "env"))
    assert main(["region", "--n", "2", "--slice", "--format", "csv"]) == 0
    assert (tmp_path / "env" / "slice_n2.csv").exists()


# -- determinism -------------------------------------------------------------


def test_rerun_from_manifest_is_byte_identical(tmp_path):
    first = tmp_path / "a"
    assert run(first, "scaling", "--family", "B", "--n", "2", "--point", "1/2 1/2 ; 1/2",
               "--eps", "2^-4..2^-7") == 0
    second = tmp_path / "b"
    assert run(second, "scaling", "--config", str(first / "manifest.json")) == 0
    for name in ("scaling.csv", "scaling.json"):
        assert (first / name).read_bytes() == (second / name).read_bytes()
    m1 = json.loads((first / "manifest.json").read_text())
    m2 = json.loads((second / "manifest.json").read_text())
    assert m1["config"] == m2["config"]


def test_manifest_for_other_command_rejected(tmp_path):
    assert run(tmp_path / "a", "blowup", "--probe", "E", "--k", "6..9") in (0, 2)
    assert run(tmp_path / "b", "scaling", "--config", str(tmp_path / "a" / "manifest.json")) == 1


def test_console_entry_point(tmp_path):
    env = dict(os.environ)
    res = subprocess.run([sys.executable, "-m", "sphavg", "--out", str(tmp_path), "classify", "3/5 3/5 ; 2/5"],
                         capture_output=True, text=True, env=env)
    assert res.returncode == 0
    assert json.loads(res.stdout)["classification"]["strong"] == "yes"
