import csv
import json
import os
import subprocess
import sys

import jsonschema
import pytest

from btwist.cli import main

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
PROFILES = os.path.join(ROOT, "profiles")
SCHEMAS = os.path.join(ROOT, "docs", "schemas")


def schema(name):
    with open(os.path.join(SCHEMAS, f"{name}.schema.json")) as fh:
        return json.load(fh)


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def prof(name):
    return os.path.join(PROFILES, f"{name}.json")


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_profiles_validate():
    for name in ("p0", "p1", "p2"):
        with open(prof(name)) as fh:
            jsonschema.validate(json.load(fh), schema("profile"))


def test_classify_p2(capsys, tmp_path):
    code, out, _ = run(capsys, "classify", prof("p2"), "--epsilon", 0.5, "--out", tmp_path, "--out-file")
    assert code == 0
    data = json.loads(out)
    jsonschema.validate(data, schema("classify"))
    assert data["in_RB_tilde"] is True
    assert json.loads((tmp_path / "classify.json").read_text()) == data


def test_classify_p1(capsys):
    code, out, _ = run(capsys, "classify", prof("p1"))
    assert code == 0 and json.loads(out)["in_RB_tilde"] is False


def test_criterion_scan(capsys, tmp_path):
    code, out, _ = run(capsys, "criterion-scan", prof("p2"), "--mode", "billiard", "--out", tmp_path)
    assert code == 0
    verdict = json.loads((tmp_path / "verdict.json").read_text())
    jsonschema.validate(verdict, schema("verdict"))
    assert verdict["xi_intervals"]
    rows = read_csv(tmp_path / "scan.csv")
    assert rows[0] == ["omega", "a_low", "a_up", "F", "F_noA", "in_xi"]
    assert len(rows) == 4097


def test_simulate_diameter(capsys, tmp_path):
    code, out, _ = run(capsys, "simulate", prof("p0"), "--r", 1, "--theta", 3.14159, "--vr", 1, "--vtheta", 0,
                       "--bounces", 5, "--out", tmp_path)
    assert code == 0
    data = json.loads(out)
    jsonschema.validate(data, schema("simulate"))
    assert data["impact_times"] == pytest.approx([2, 4, 6, 8, 10], abs=1e-9)
    rows = read_csv(tmp_path / "events.csv")
    assert rows[0] == ["n", "time", "angle", "vr_in", "vr_out", "c", "energy_in", "energy_out"]
    assert len(rows) == 6


def test_simulate_ensemble(capsys, tmp_path):
    code, out, _ = run(capsys, "simulate", prof("p2"), "--ensemble", 4, "--bounces", 50, "--seed", 3,
                       "--out", tmp_path)
    assert code == 0
    data = json.loads(out)
    jsonschema.validate(data, schema("simulate"))
    assert data["trajectories"] == 4 and data["max_del_residual"] <= 1e-8
    assert read_csv(tmp_path / "ensemble.csv")[0] == ["c", "bounces", "max_del_residual", "error", "c_drift"]


def test_orbit(capsys, tmp_path):
    code, out, _ = run(capsys, "orbit", prof("p0"), "--t", 0, "--K", 0.5, "--n", 120, "--out", tmp_path)
    assert code == 0
    data = json.loads(out)
    jsonschema.validate(data, schema("orbit"))
    assert data["rotation_number"] == pytest.approx(2.0)
    rows = read_csv(tmp_path / "orbit.csv")
    assert rows[0] == ["n", "t_lift", "t_mod1", "K", "tau", "del_residual"] and len(rows) == 122


def test_orbit_below_threshold_is_reported(capsys, tmp_path):
    code, out, _ = run(capsys, "orbit", prof("p1"), "--t", 0, "--K", 1e-4, "--n", 3, "--out", tmp_path)
    assert code == 0
    data = json.loads(out)
    assert data["stopped_early"] and data["failure"].startswith("NoRootInStrip")


def test_minimize(capsys, tmp_path):
    code, out, _ = run(capsys, "minimize", prof("p2"), "--p", 25, "--q", 2, "--out", tmp_path)
    assert code == 0
    data = json.loads(out)
    jsonschema.validate(data, schema("configuration"))
    assert data["max_del_residual"] <= 1e-10
    assert read_csv(tmp_path / "configuration.csv")[0] == ["n", "t_lift", "t_mod1", "gap", "del_residual"]


def test_mather_probe(capsys, tmp_path):
    code, out, _ = run(capsys, "mather-probe", prof("p2"), "--omega", 12.618033988749895, "--depth", 6,
                       "--out", tmp_path)
    assert code == 0
    data = json.loads((tmp_path / "mather_probe.json").read_text())
    jsonschema.validate(data, schema("mather_probe"))
    assert data == json.loads(out)


def test_twist_check(capsys):
    code, out, _ = run(capsys, "twist-check", prof("p2"), "--c", 0.01, "--tau-min", 1, "--tau-max", 12.7,
                       "--grid", 128)
    assert code == 0
    data = json.loads(out)
    jsonschema.validate(data, schema("twist"))
    assert data["min_neg_d12"] > 0


def test_convergence(capsys, tmp_path):
    code, out, _ = run(capsys, "convergence", prof("p2"), "--tau-min", 1, "--tau-max", 12.7, "--out", tmp_path)
    assert code == 0
    data = json.loads(out)
    jsonschema.validate(data, schema("convergence"))
    assert data["slope"] >= 0.9


@pytest.mark.parametrize("extra,expect", [([], "capped"), (["--uncapped"], "uncapped")])
def test_bound_check(capsys, extra, expect):
    code, out, _ = run(capsys, "bound-check", prof("p0"), "--tau0", 2, *extra)
    assert code == 0
    data = json.loads(out)
    jsonschema.validate(data, schema("bound"))
    if expect == "uncapped":
        assert data["min_slack"] == 0.0
    else:
        assert data["min_slack"] > 0


def test_bound_check_minimizer_graph(capsys):
    code, out, _ = run(capsys, "bound-check", prof("p2"), "--p", 25, "--q", 2)
    assert code == 0 and json.loads(out)["min_slack"] > -1e-6


def test_exit_2_on_invariant_violation(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"mean": 0.1, "harmonics": [[0.2, 0.0]]}')
    code, _, err = run(capsys, "classify", bad)
    assert code == 2 and err.startswith("NonPositiveRadius")


def test_exit_1_on_domain_error(capsys):
    code, _, err = run(capsys, "criterion-scan", prof("p1"), "--mode", "billiard",
                       "--epsilon", 0.5, "--grid", 10)
    assert code == 1 and "ValueError" in err
    code, _, err = run(capsys, "minimize", prof("p2"), "--p", 400, "--q", 1)
    assert code == 1 and err.startswith("OutOfStrip")


def test_usage_errors_print_flags(capsys):
    code, _, err = run(capsys, "bogus", prof("p0"))
    assert code == 1 and "classify" in err and "invalid choice" in err
    code, _, err = run(capsys, "classify", prof("p0"), "--grid", -3)
    assert code == 1 and "--critical-point-mode" in err
    code, _, err = run(capsys, "simulate", prof("p0"))
    assert code == 1 and "--bounces" in err
    code, _, err = run(capsys, "classify", "/nonexistent.json")
    assert code == 1 and "Error" in err


def test_deterministic_outputs(capsys, tmp_path):
    outs = []
    for d in ("a", "b"):
        path = tmp_path / d
        run(capsys, "simulate", prof("p2"), "--ensemble", 3, "--bounces", 20, "--seed", 7, "--out", path)
        run(capsys, "criterion-scan", prof("p2"), "--grid", 512, "--out", path)
        run(capsys, "minimize", prof("p2"), "--p", 37, "--q", 3, "--out", path)
        outs.append({f: (path / f).read_bytes() for f in sorted(os.listdir(path))})
    assert outs[0] == outs[1]
    assert set(outs[0]) == {"ensemble.csv", "scan.csv", "verdict.json", "configuration.csv"}


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "btwist.cli", "classify", prof("p0")],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["in_R0"] is True


def test_numpy_backend_subprocess():
    code = ("import btwist.kernels as k, json; from btwist.profile import RadiusProfile; "
            "from btwist.genfunc import hc_jet; "
            "print(json.dumps([k.active.name, hc_jet(RadiusProfile(1.0, ((0.0005, 0.0),)), 0.01, 0.2, 3.4).value]))")
    env = dict(os.environ, BTWIST_BACKEND="numpy")
    a = json.loads(subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                                  check=True).stdout)
    env.pop("BTWIST_BACKEND")
    b = json.loads(subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                                  check=True).stdout)
    assert a[0] != b[0]
    assert a[1] == pytest.approx(b[1], rel=1e-14)
