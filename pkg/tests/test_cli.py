import json
import subprocess
import sys

import pytest

from jetsym import __version__
from jetsym.cli import main

from conftest import spec_path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize("cmd,spec,code", [
    ("check", "nonlinear_wave", 0),
    ("check", "academic", 0),
    ("symmetry", "linear_wave", 0),
    ("symmetry", "nonlinear_wave", 0),
    ("check", "nonlinear_wave_dx2", 1),
    ("symmetry", "nonlinear_wave_vu", 1),
    ("check", "nonlinear_wave_vu", 64),
    ("determine", "heat_sin", 3),
    ("determine", "nonlinear_wave", 0),
    ("simulate", "academic_crossing", 1),
])
def test_exit_codes(capsys, cmd, spec, code):
    got, out, _ = run(capsys, cmd, spec_path(spec))
    assert got == code
    report = json.loads(out)
    assert report["exit_code"] == code
    assert report["command"] == cmd


def test_report_envelope(capsys):
    code, out, _ = run(capsys, "check", spec_path("nonlinear_wave"), "--seed", "0x10")
    r = json.loads(out)
    assert r["tool"] == "jetsym" and r["version"] == __version__
    assert r["seed"] == 16
    assert r["flags"] == {"boundary_pivots": False, "extended_reduction": False,
                          "reduce_output": False}
    assert len(r["spec_sha256"]) == 64
    assert r["result"]["aggregate"] == "PASS-proven"
    assert r["result"]["conclusion"] == "the system is not observable"


def test_reports_are_byte_stable(capsys):
    outs = [run(capsys, "check", spec_path("nonlinear_wave_dx2"))[1] for _ in range(2)]
    assert outs[0] == outs[1]
    outs = [run(capsys, "determine", spec_path("nonlinear_wave"), "--strategy", "sampling")[1]
            for _ in range(2)]
    assert outs[0] == outs[1]


def test_seed_changes_witnesses(capsys):
    a = json.loads(run(capsys, "check", spec_path("nonlinear_wave_dx2"), "--seed", "1")[1])
    b = json.loads(run(capsys, "check", spec_path("nonlinear_wave_dx2"), "--seed", "2")[1])
    wa = [c.get("witness") for c in a["result"]["conditions"]]
    wb = [c.get("witness") for c in b["result"]["conditions"]]
    assert wa != wb


def test_failure_report_has_witnesses(capsys):
    _, out, _ = run(capsys, "check", spec_path("nonlinear_wave_dx2"))
    conds = {c["condition"]: c for c in json.loads(out)["result"]["conditions"]}
    assert conds["domain-1"]["residual"] == "-1"
    assert conds["output"]["residual"] == "1"
    for name in ("domain-1", "output"):
        assert conds[name]["verdict"] == "nonzero"
        assert "witness" in conds[name]


def test_determine_reports_survivor(capsys):
    code, out, _ = run(capsys, "determine", spec_path("nonlinear_wave"))
    result = json.loads(out)["result"]
    assert code == 0
    assert result["null_space_dimension"] == 1
    assert result["survivors"][0]["generator"] == {"vx1": "1", "vx2": "0"}


def test_determine_custom_basis(capsys):
    code, out, _ = run(capsys, "determine", spec_path("nonlinear_wave"), "--basis", "1; z; x1")
    result = json.loads(out)["result"]
    assert code == 0
    assert result["ansatz"]["unknowns"] == 6
    code, _, err = run(capsys, "determine", spec_path("nonlinear_wave"), "--basis", "1; x9")
    assert code == 64 and "x9" in err


@pytest.mark.parametrize("text,fragment", [
    ("[system]\nstates = ['x1']\n", "[equations] section is missing"),
    ("[system]\nstates = ['a']\n[equations]\na_t = '1'\n[output]\nexpr = 'x1'\n", "[system]"),
    ("[system]\nstates = ['x1']\n[equations]\nx1_t = 'x1 +'\n[output]\nexpr = 'x1'\n",
     "[equations.x1_t]"),
    ("[system]\nstates = ['x1']\n[equations]\nx1_t = 'x1'\n[output]\nexpr = 'x1'\nat = 2\n",
     "[output.at]"),
    ("[system]\nstates = ['x1']\n[equations]\nx1_t = 'x1'\n[output]\nexpr = 'x1'\n[extra]\n",
     "unknown section"),
    ("not toml [", ""),
])
def test_bad_spec_exits_64(capsys, tmp_path, text, fragment):
    path = tmp_path / "bad.spec"
    path.write_text(text)
    code, out, err = run(capsys, "check", path)
    assert code == 64
    assert fragment in err
    assert str(path) in err
    assert json.loads(out)["result"]["error"]


def test_missing_file_and_usage(capsys, tmp_path):
    assert run(capsys, "check", tmp_path / "nope.spec")[0] == 64
    assert run(capsys, "check")[0] == 64
    assert run(capsys, "frobnicate", spec_path("academic"))[0] == 64
    assert run(capsys, "check", spec_path("academic"), "--seed", "-1")[0] == 64
    assert run(capsys, "--version")[0] == 0


def test_missing_sections(capsys):
    code, _, err = run(capsys, "simulate", spec_path("heat_sin"))
    assert code == 64 and "[sim]" in err
    code, _, err = run(capsys, "check", spec_path("heat_sin"))
    assert code == 64 and "[generator]" in err


def test_simulate_csv(capsys, tmp_path):
    out = tmp_path / "traj.csv"
    code, text, _ = run(capsys, "simulate", spec_path("academic"), "--out", out, "--stride", "1000")
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,z,x1,x2,u,y"
    assert len(lines) == 1 + 6 * 41
    result = json.loads(text)["result"]
    assert result["output_node"] == 20 and result["snap_distance"] == 0.0


def test_simulate_crossing_report(capsys):
    _, out, _ = run(capsys, "simulate", spec_path("academic_crossing"))
    result = json.loads(out)["result"]
    assert "x1 changed sign" in result["error"]
    assert result["step"] > 0 and result["node"] is not None


def test_indist_override_and_out(capsys, tmp_path):
    code, _, err = run(capsys, "indist", spec_path("nonlinear_wave_dx2"))
    assert code == 64 and "override" in err
    d = tmp_path / "run"
    code, out, _ = run(capsys, "indist", spec_path("nonlinear_wave_dx2"), "--override",
                       "--eps", "0.5", "--out", d)
    assert code == 1
    assert (d / "report.json").read_text() == out
    assert (d / "outputs.csv").read_text().startswith("t,y,y_eps=0.5\n")
    assert json.loads(out)["result"]["override"] is True


def test_console_script_entry():
    proc = subprocess.run([sys.executable, "-m", "jetsym.cli", "check",
                           str(spec_path("nonlinear_wave"))], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["exit_code"] == 0
