import json
import subprocess
import sys

import pytest

from wavetrace.cli import run
from wavetrace.groupfile import group_to_dict
from wavetrace.schottky import SchottkyGroup


def out_of(capsys, argv):
    code = run(argv)
    return code, capsys.readouterr().out


def test_validate_bundled(capsys):
    code, out = out_of(capsys, ["validate"])
    assert code == 0
    rep = json.loads(out)
    assert rep["valid"] and rep["min_gap"] > 0


def test_validate_invalid_group(tmp_path, capsys):
    bad = SchottkyGroup.from_disks([-1.0, 1.0, -0.2, 3.0], [0.5] * 4)
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(group_to_dict(bad)))
    assert run(["validate", "--group", str(p)]) == 2
    assert run(["geodesics", "--group", str(p), "--T", "5"]) == 2


def test_model_identities(capsys):
    code, out = out_of(capsys, ["model-identities", "--n", "1", "--tmin", "0.3", "--tmax", "10"])
    assert code == 0 and json.loads(out)["max_deviation"] < 1e-10


def test_count_schema(tmp_path, capsys):
    dest = tmp_path / "count.csv"
    assert run(["count", "--T", "12", "--fit", "--group", "pants_wide", "--out", str(dest)]) == 0
    summary = json.loads(dest.with_suffix(".json").read_text())
    for key in ("delta", "fitted_exponent", "beta_n"):
        assert summary[key] is not None
    assert dest.read_text().startswith("T,N,li_main,li_eigen,residual")


def test_count_window(capsys):
    code, out = out_of(capsys, ["count", "--T", "14", "--format", "json", "--y", "5000"])
    assert code == 0
    w = json.loads(out)["window"]
    assert w["y"] == 5000 and w["psi"] > 0


def test_geodesics_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(["geodesics", "--T", "16", "--out", str(a), "--workers", "1"]) == 0
    assert run(["geodesics", "--T", "16", "--out", str(b), "--workers", "4"]) == 0
    assert a.read_bytes() == b.read_bytes()
    row = a.read_text().splitlines()[1].split(",")
    assert row[0] == "b" and len(row[1].replace(".", "").lstrip("0")) >= 16


def test_zeta_and_delta(capsys):
    code, out = out_of(capsys, ["zeta", "--s", "2+1j"])
    doc = json.loads(out)
    assert code == 0
    det, eul = complex(*doc["det"]), complex(*doc["euler"])
    assert abs(det - eul) < 1e-7 * abs(eul)
    code, out = out_of(capsys, ["delta", "--N", "16"])
    assert abs(json.loads(out)["delta"] - 0.36288040696606) < 1e-9


def test_resonances_csv(capsys):
    code, out = out_of(capsys, ["resonances", "--box", "-0.5,0.45,-0.3,0.3"])
    rows = out.splitlines()
    assert code == 0 and rows[0] == "re,im,multiplicity"
    assert [r.split(",")[2] for r in rows[1:]] == ["2", "1"]


def test_conformal_dk(capsys):
    code, out = out_of(capsys, ["conformal-dk", "--n", "3", "--K", "0", "--kmax", "4"])
    assert code == 0
    assert [r.split(",")[1] for r in out.splitlines()[1:]] == ["1"] * 4
    assert run(["conformal-dk", "--n", "3", "--K", "-1"]) == 2


def test_certification_failure_exit_code(capsys):
    assert run(["trace-check", "--testfn", "2,8", "--T", "5"]) == 3


@pytest.mark.parametrize("argv", [["bogus"], ["validate", "--nope"], ["geodesics"],
                                  ["geodesics", "--T", "-1"], ["resonances", "--box", "1,2"]])
def test_usage_errors_exit_64(argv):
    with pytest.raises(SystemExit) as exc:
        run(argv)
    assert exc.value.code == 64


def test_console_entry_point():
    p = subprocess.run([sys.executable, "-m", "wavetrace.cli", "--bogus"], capture_output=True, text=True)
    assert p.returncode == 64 and "usage" in p.stderr
