import json
import subprocess
import sys

import numpy as np
import pytest

from holofix import io
from holofix.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, RunConfig, UsageError, main, parse_complex_list, parse_half_space


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out else None)


@pytest.fixture
def points_file(tmp_path):
    p = tmp_path / "points.json"
    p.write_text(json.dumps({"points": io.points_to_json([[0, 0], [0, 1], [2, 1j]])}))
    return str(p)


def test_parsers():
    assert np.array_equal(parse_complex_list("0.1+0.2j, 0.3"), [0.1 + 0.2j, 0.3])
    hs = parse_half_space("im2>=-0.5")
    assert (hs.coord, hs.sign, hs.bound) == (1, 1, -0.5)
    assert parse_half_space("im1<=0.25").sign == -1
    with pytest.raises(UsageError):
        parse_half_space("re2>0")
    with pytest.raises(UsageError):
        parse_complex_list("abc")


def test_run_config_round_trip():
    cfg = RunConfig(seed=4, schedule_path="s.json")
    assert RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg


def test_construct_then_verify_and_fix(capsys, tmp_path, points_file):
    out = tmp_path / "g.json"
    code, art = run(capsys, "construct", "--points", points_file, "--output", str(out))
    assert code == EXIT_OK and art["ok"] and art["command"] == "construct"
    assert art["result"]["verification"]["passed"] and art["result"]["input_hausdorff"] < 1e-10
    assert "automorphism_residual" in art["config"]["tolerances"]
    code, art = run(capsys, "verify", "--map", str(out))
    assert code == EXIT_OK and art["result"]["verification"]["max_residual"] < 1e-10
    code, art = run(capsys, "fix-points", "--map", str(out), "--box", "3", "--starts", "1500", "--structural")
    assert code == EXIT_OK
    found = io.points_from_json(art["result"]["report"]["found"])
    assert len(found) == 3


def test_kobayashi_commands(capsys):
    code, art = run(capsys, "kobayashi", "dist", "--z", "0,0", "--w", "0.5,0")
    assert code == EXIT_OK and abs(art["result"]["distance"] - np.arctanh(0.5)) < 1e-15
    code, art = run(capsys, "kobayashi", "ball", "--center", "0,0", "--sigma", str(np.arctanh(0.5)))
    assert code == EXIT_OK
    code, art = run(capsys, "kobayashi", "nearest", "--p", "0.1,0", "--center", "0,0", "--radius", "0.5",
                    "--half-space", "im2>=-0.5")
    assert code == EXIT_OK and art["result"]["nearest"]["single_cluster"]


def test_shell_domain_commands(capsys, tmp_path):
    code, art = run(capsys, "shell-domain", "build")
    assert code == EXIT_OK and len(art["result"]["domain"]["shells"]) == 14
    sched = tmp_path / "s.json"
    sched.write_text(json.dumps({"S": 1, "base": 16, "ratio": 0.5}))
    code, art = run(capsys, "shell-domain", "build", "--schedule", str(sched))
    assert len(art["result"]["domain"]["shells"]) == 4
    code, art = run(capsys, "shell-domain", "check-line", "--a", "0.1,0", "--b", "0.2,0.05")
    assert code == EXIT_OK and art["result"]["witness"]["margin"] > 1e-6
    code, art = run(capsys, "shell-domain", "certify", "--a", "0.1,0", "--b", "0.2,0.05")
    assert code == EXIT_OK and art["result"]["certificate"]["passed"]
    code, art = run(capsys, "shell-domain", "check-line", "--schedule", str(sched), "--a", "0.98,0",
                    "--b", "0.98,0.1")
    assert code == EXIT_FAIL and not art["ok"] and "diagnostics" in art["result"]


def test_bad_schedule_is_usage_error(capsys, tmp_path):
    sched = tmp_path / "s.json"
    sched.write_text(json.dumps({"S": 2, "base": 8, "ratio": 0.5}))
    assert main(["shell-domain", "build", "--schedule", str(sched)]) == EXIT_USAGE
    assert "generation_disjoint" in capsys.readouterr().err


def test_gallery_commands(capsys):
    code, art = run(capsys, "gallery", "curve", "--roots", "0,1,-1,2j,3,-3,1j")
    assert code == EXIT_OK and art["result"]["count"] == 7
    code, art = run(capsys, "gallery", "curve", "--blaschke", "0.1,-0.5j")
    assert art["result"]["count"] == 2
    code, art = run(capsys, "gallery", "strip", "--k", "3")
    assert code == EXIT_OK and art["result"]["domain_invariant"]
    assert io.points_from_json(art["result"]["fixed_points"])[0, 0] == 3.5
    code, art = run(capsys, "gallery", "annuli", "--radii", "0.25,0.25", "--solve")
    assert code == EXIT_OK and art["result"]["count"] == 4 and all(art["result"]["isolated"])


def test_linearize_commands(capsys):
    code, art = run(capsys, "linearize", "--domain", "annulus", "--r", "0.25")
    lin = art["result"]["linearization"]
    assert code == EXIT_OK and lin["exact"] and lin["equivariance_residual"] < 1e-12
    code, art = run(capsys, "linearize", "--domain", "ball", "--dim", "2", "--samples", "500")
    assert code == EXIT_OK and art["result"]["linearization"]["samples"] == 500
    assert main(["linearize", "--domain", "polydisc", "--point", "0.1,0"]) == EXIT_USAGE


def test_classify_commands(capsys, tmp_path):
    K = tmp_path / "k.json"
    K.write_text(json.dumps(io.points_to_json([[0.2, 0.1j], [-0.3, 0.2], [0.1, -0.4]])))
    code, art = run(capsys, "classify", "--points", str(K), "--family", "pair-fixing")
    assert code == EXIT_OK and art["result"]["classification"]["verdict"] == "determining"
    K.write_text(json.dumps(io.points_to_json([[0.2, 0.1j], [-0.2, -0.1j]])))
    code, art = run(capsys, "classify", "--points", str(K), "--family", "pair-fixing")
    assert art["result"]["classification"]["verdict"] == "quasi_determining"


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == EXIT_USAGE
    assert main(["verify", "--map", "/nonexistent.json"]) == EXIT_USAGE


def test_artifacts_are_deterministic(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("HOLOFIX_OUT", str(tmp_path))
    runs = []
    for _ in range(2):
        main(["gallery", "annuli", "--radii", "0.25,0.25", "--solve", "--seed", "3"])
        runs.append((tmp_path / "gallery-annuli.json").read_bytes())
    assert runs[0] == runs[1]


def test_console_script_entry_point():
    out = subprocess.run([sys.executable, "-m", "holofix.cli", "kobayashi", "dist", "--z", "0", "--w", "0.5"],
                         capture_output=True, text=True)
    assert out.returncode == 0 and json.loads(out.stdout)["ok"]
