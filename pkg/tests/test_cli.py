import json

import numpy as np
import pytest

from holofoliate.circle_fourier import BoundaryFunction
from holofoliate.cli import run, self_test
from holofoliate.motion_extend import HolomorphicMotionSpec
from holofoliate.torus_model import TorusFamilySpec


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture
def specs(tmp_path):
    return {
        "std": write(tmp_path / "std.json", TorusFamilySpec.standard().to_dict()),
        "bumpy": write(tmp_path / "bumpy.json", TorusFamilySpec({(0, 0): 1.0, (0, 1): 0.1}).to_dict()),
        "bad": write(tmp_path / "bad.json", TorusFamilySpec({(0, 0): 1.0, (0, 1): 2.0}).to_dict()),
    }


def records(text):
    return [json.loads(line) for line in text.strip().splitlines()]


def test_validate_torus(specs, capsys):
    assert run(["validate-torus", specs["std"]]) == 0
    assert records(capsys.readouterr().out)[0]["passed"] is True
    assert run(["validate-torus", specs["bad"]]) == 1
    assert records(capsys.readouterr().out)[0]["failures"]


def test_solve_disk_constant_seed(specs, capsys):
    assert run(["solve-disk", specs["std"], "--t", "0.25", "--seed", "0.3,0.4", "--grid", "64"]) == 0
    rec = records(capsys.readouterr().out)[0]
    assert rec["level"] == 0.25 and rec["boundary"]["N"] == 64
    assert rec["trace_residual"] < 1e-10


def test_solve_disk_seed_file_and_anchor(specs, tmp_path, capsys):
    seed = BoundaryFunction.constant(0.5 + 0.1j, 32)
    path = write(tmp_path / "seed.json", json.loads(seed.to_json()))
    assert run(["--grid", "64", "solve-disk", specs["std"], "--t", "0.3", "--seed", path]) == 0
    assert records(capsys.readouterr().out)[0]["boundary"]["N"] == 64
    anchor = np.sqrt(0.3) * np.exp(0.4j)
    argv = ["solve-disk", specs["std"], "--t", "0.3", "--seed-file", path, "--anchor", f"{anchor.real},{anchor.imag}"]
    assert run(argv) == 0
    first = records(capsys.readouterr().out)[0]["boundary"]["samples"][0]
    assert abs(complex(*first) - anchor) < 1e-9


def test_solve_disk_winding_seed_fails(specs, tmp_path, capsys):
    th = 2 * np.pi * np.arange(64) / 64
    path = write(tmp_path / "wind.json", json.loads(BoundaryFunction(0.5 * np.exp(1j * th)).to_json()))
    assert run(["solve-disk", specs["std"], "--t", "0.25", "--seed", path]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "NonzeroWinding" and err["hypothesis"]


def test_continue_aliases(specs, capsys):
    assert run(["continue", specs["bumpy"], "--from", "0.05", "--to", "0.5", "--grid", "64"]) == 0
    recs = records(capsys.readouterr().out)
    assert recs[0]["level"] == 0.05 and recs[-1]["level"] == 0.5
    assert [r["step"] for r in recs] == list(range(len(recs)))
    assert run(["continue", specs["bumpy"], "--t0", "0.05", "--t1", "0.5", "--grid", "64"]) == 0
    assert records(capsys.readouterr().out) == recs


def test_foliate_json_and_determinism(specs, capsys):
    argv = ["foliate", specs["bumpy"], "--t", "0.6", "--leaves", "8", "--grid", "64"]
    assert run(argv) == 0
    first = capsys.readouterr().out
    assert run(argv) == 0
    assert capsys.readouterr().out == first
    recs = records(first)
    assert recs[0]["record"] == "foliation" and len(recs) == 9
    assert all(r["record"] == "leaf" for r in recs[1:])


def test_foliate_csv_to_file(specs, tmp_path):
    out = tmp_path / "fol.csv"
    assert run(["--csv", "--out", str(out), "foliate", specs["std"], "--leaves", "8", "--grid", "32"]) == 0
    rows = out.read_text().strip().splitlines()
    assert rows[0] == "xi,theta,re_g,im_g" and len(rows) == 1 + 8 * 32


def test_leaf_through(specs, capsys):
    assert run(["leaf-through", specs["std"], "--point", "0.3,0.4", "--leaves", "8", "--grid", "64"]) == 0
    rec = records(capsys.readouterr().out)[0]
    assert rec["level"] == pytest.approx(0.25, abs=1e-8)
    assert run(["leaf-through", specs["std"], "--point", "0,0"]) == 2
    assert json.loads(capsys.readouterr().err)["error"] == "PointNotEnclosed"


def test_verify_barriers(specs, capsys):
    assert run(["verify-barriers", specs["bumpy"], "--leaves", "8", "--grid", "64"]) == 0
    rec = records(capsys.readouterr().out)[0]
    assert rec["passed"] and len(rec["trapping"]) == 16


def test_verify_barriers_with_disks(specs, tmp_path, capsys):
    disk = {"level": 0.25, "boundary": json.loads(BoundaryFunction.constant(0.5, 64).to_json())}
    path = write(tmp_path / "disks.json", [disk])
    assert run(["verify-barriers", specs["std"], "--disks", path]) == 0
    assert len(records(capsys.readouterr().out)[0]["trapping"]) == 2
    write(tmp_path / "nolevel.json", [{"boundary": disk["boundary"]}])
    assert run(["verify-barriers", specs["std"], "--disks", str(tmp_path / "nolevel.json")]) == 1


def test_extend_motion_identity(tmp_path, capsys):
    spec = HolomorphicMotionSpec((1.0, 2j), ((), ()))
    path = write(tmp_path / "motion.json", spec.to_dict())
    assert run(["extend-motion", path, "--new=-1,0", "--leaves", "8", "--grid", "64"]) == 0
    rec = records(capsys.readouterr().out)[0]
    traj = np.array(rec["trajectory"])
    assert np.max(np.abs(traj - [-1.0, 0.0])) < 1e-9
    assert rec["certificates"]["base_point_error"] < 1e-7


def test_extend_motion_rejections(tmp_path, capsys):
    crossing = write(tmp_path / "cross.json", {"points": [[0, 0], [1, 0]], "trajectories": [[], [[-2, 0]]]})
    assert run(["extend-motion", crossing, "--new", "3,0"]) == 1
    assert json.loads(capsys.readouterr().err)["error"] == "PointsCollide"
    ok = write(tmp_path / "ok.json", {"points": [[1, 0], [0, 2]], "trajectories": [[], []]})
    assert run(["extend-motion", ok, "--new", "0,0", "--r0", "1.5"]) == 1


def test_usage_errors(specs, capsys):
    for argv in (["bogus"], [], ["solve-disk", specs["std"]], ["--grid", "100", "self-test"],
                 ["solve-disk", specs["std"], "--t", "-1"], ["--threads", "0", "self-test"]):
        with pytest.raises(SystemExit) as info:
            run(argv)
        assert info.value.code == 1
        assert "validate-torus" in capsys.readouterr().err


def test_missing_and_malformed_files(tmp_path, capsys):
    assert run(["validate-torus", str(tmp_path / "missing.json")]) == 1
    (tmp_path / "x.json").write_text("{")
    assert run(["foliate", str(tmp_path / "x.json")]) == 1
    assert "InputError" in capsys.readouterr().err


def test_global_flags_after_command(specs, capsys):
    assert run(["solve-disk", specs["std"], "--t", "0.25", "--grid", "32", "--tol", "1e-9"]) == 0
    assert records(capsys.readouterr().out)[0]["boundary"]["N"] == 32


def test_self_test(capsys):
    assert all(self_test().values())
    assert run(["--threads", "1", "self-test"]) == 0
    assert records(capsys.readouterr().out)[0]["passed"]
