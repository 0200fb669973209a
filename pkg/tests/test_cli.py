import csv
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from flagflow.cli import main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _run(cmd, cfg, out, *extra):
    return main([cmd, str(cfg), "--out", str(out), *extra])


def _write(tmp_path, name, data):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return p


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_decompose_plane(tmp_path):
    assert _run("decompose", CONFIGS / "projective_plane.json", tmp_path) == 0
    d = json.loads((tmp_path / "decompose.json").read_text())
    assert d["mu"] == pytest.approx(3.0)
    assert np.allclose(d["jordan"]["E"][0], 0.0)
    assert np.allclose(d["jordan"]["H"][0], np.diag([-1.0, -1.0, 2.0]))
    assert np.allclose(d["jordan"]["N"][0], [[0, 1, 0], [0, 0, 0], [0, 0, 0]])
    assert d["chamber"][0]["multiplicities"] == [1, 2]


def test_decompose_zero_generator_warns(tmp_path, capsys):
    cfg = _write(tmp_path, "zero.json", {"factors": [3], "generator": [np.zeros((3, 3)).tolist()]})
    assert _run("decompose", cfg, tmp_path) == 0
    d = json.loads((tmp_path / "decompose.json").read_text())
    assert d["mu"] is None
    assert np.allclose(d["jordan"]["H"][0], 0.0)
    assert "NoPositiveRoot" in capsys.readouterr().err


def test_outputs_are_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for cmd in ("decompose", "components", "decay"):
        assert _run(cmd, CONFIGS / "random_sl4.json", a) == 0
        assert _run(cmd, CONFIGS / "random_sl4.json", b) == 0
    for f in sorted(a.iterdir()):
        assert f.read_bytes() == (b / f.name).read_bytes()


def test_seed_override_changes_random_generator(tmp_path):
    assert _run("decompose", CONFIGS / "random_sl4.json", tmp_path / "a") == 0
    assert _run("decompose", CONFIGS / "random_sl4.json", tmp_path / "b", "--seed", "8") == 0
    assert (tmp_path / "a" / "decompose.json").read_bytes() != (tmp_path / "b" / "decompose.json").read_bytes()


def test_components_plane(tmp_path):
    assert _run("components", CONFIGS / "projective_plane.json", tmp_path) == 0
    rows = _rows(tmp_path / "components.csv")
    got = sorted((r["structure"], r["dim_fix"], r["n_w"], r["dim_vminus"], r["attractor"], r["repeller"]) for r in rows)
    assert got == [("F_2(1)", "1", "1", "0", "0", "1"), ("pt", "0", "0", "2", "1", "0")]


def test_components_regular_sl3(tmp_path):
    cfg = _write(tmp_path, "reg.json", {"factors": [3], "generator": [np.diag([1.3, 0.2, -1.5]).tolist()]})
    assert _run("components", cfg, tmp_path) == 0
    rows = _rows(tmp_path / "components.csv")
    assert sorted(int(r["n_w"]) for r in rows) == [0, 1, 1, 2, 2, 3]


def test_components_torus(tmp_path):
    assert _run("components", CONFIGS / "torus.json", tmp_path) == 0
    rows = _rows(tmp_path / "components.csv")
    assert len(rows) == 2 and all(r["dim_fix"] == "1" for r in rows)


def test_decay_plane_and_torus(tmp_path):
    for name, bound in (("projective_plane", 2.7), ("torus", 1.7)):
        out = tmp_path / name
        assert _run("decay", CONFIGS / f"{name}.json", out) == 0
        d = json.loads((out / "decay.json").read_text())
        assert d["passed"]
        assert min(min(r["lambda_emp"]) for r in d["reports"]) >= bound
        assert len(_rows(out / "decay.csv")) > 0


def test_decay_hyperbolic_only_fits_exactly(tmp_path):
    cfg = _write(tmp_path, "h.json", {"factors": [3], "generator": [np.diag([2.0, -1.0, -1.0]).tolist()], "flag_type": [[1]]})
    assert _run("decay", cfg, tmp_path) == 0
    d = json.loads((tmp_path / "decay.json").read_text())
    assert max(max(r["fit_residual"]) for r in d["reports"]) <= 1e-8


def test_decay_failure_exit_code(tmp_path, capsys):
    data = json.loads((CONFIGS / "random_sl4.json").read_text())
    data["horizon"] = 10
    cfg = _write(tmp_path, "short.json", data)
    assert _run("decay", cfg, tmp_path) == 3
    assert "verification failed" in capsys.readouterr().err


def test_portrait_plane(tmp_path):
    assert _run("portrait", CONFIGS / "projective_plane.json", tmp_path) == 0
    summary = json.loads((tmp_path / "portrait.json").read_text())
    assert summary["chart"] == "RP2"
    rows = _rows(tmp_path / "portrait.csv")
    labels = set(summary["components"])
    traj = [r for r in rows if r["kind"] == "trajectory"]
    assert {r["label"] for r in traj} == {"1,0;0,2"}
    assert all(r["label"] in labels for r in rows if r["kind"] != "trajectory")
    rec = [r for r in rows if r["kind"] == "recurrent" and r["label"] == "0,1;1,1"]
    assert len(rec) == 1
    assert float(rec[0]["c1"]) == pytest.approx(1.0) and float(rec[0]["c2"]) == pytest.approx(0.0, abs=1e-12)
    coords = np.array([[float(r["c1"]), float(r["c2"])] for r in rows])
    assert np.all(np.isfinite(coords)) and np.all(np.hypot(*coords.T) <= 1 + 1e-12)
    # the flow moves from the repeller circle at radius 1 towards the attractor at the centre
    by_id = {}
    for r in traj:
        by_id.setdefault(r["id"], []).append(np.hypot(float(r["c1"]), float(r["c2"])))
    assert all(radii[-1] < 1e-3 for radii in by_id.values())


def test_portrait_torus(tmp_path):
    assert _run("portrait", CONFIGS / "torus.json", tmp_path) == 0
    summary = json.loads((tmp_path / "portrait.json").read_text())
    assert summary["chart"] == "RP1xRP1"
    assert len(summary["components"]) == 2
    assert summary["recurrent_points"] == {label: 1 for label in summary["components"]}
    rows = _rows(tmp_path / "portrait.csv")
    angles = np.array([[float(r["c1"]), float(r["c2"])] for r in rows])
    assert np.all((angles >= 0) & (angles < np.pi))


def test_portrait_without_nilpotent_part_is_rotation_symmetric(tmp_path):
    data = json.loads((CONFIGS / "projective_plane.json").read_text())
    data["generator"] = [np.diag([-1.0, -1.0, 2.0]).tolist()]
    cfg = _write(tmp_path, "sym.json", data)
    assert _run("portrait", cfg, tmp_path) == 0
    rows = _rows(tmp_path / "portrait.csv")
    traj = [r for r in rows if r["kind"] == "trajectory"]
    assert {r["label"] for r in traj} == {"1,0;0,2"}
    summary = json.loads((tmp_path / "portrait.json").read_text())
    assert summary["components"] == ["1,0;0,2", "0,1;1,1"]
    # the start grid is invariant under a quarter turn, and so is every time slice
    by_t = {}
    for r in traj:
        by_t.setdefault(r["t"], []).append((float(r["c1"]), float(r["c2"])))
    for pts in by_t.values():
        a = np.array(sorted(np.round(pts, 9).tolist()))
        b = np.array(sorted(np.round([(-y, x) for x, y in pts], 9).tolist()))
        assert np.allclose(a, b, atol=1e-8)


def test_portrait_rejects_large_manifolds(tmp_path, capsys):
    assert _run("portrait", CONFIGS / "random_sl4.json", tmp_path) == 2
    assert "DimensionTooLarge" in capsys.readouterr().err


def test_periodic_rotating_frame(tmp_path):
    assert _run("periodic", CONFIGS / "rotating_frame.json", tmp_path) == 0
    d = json.loads((tmp_path / "periodic.json").read_text())
    closed = np.array([[-np.e, 0.0], [0.0, -1 / np.e]])
    assert np.allclose(d["monodromy"][0], closed, atol=1e-6)
    assert d["mu_per_time"] == pytest.approx(1.0)
    assert d["passed"] and len(d["components"]) == 2


def test_periodic_constant_matches_autonomous(tmp_path):
    X = [[-1.0, 1.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 2.0]]
    cfg = _write(
        tmp_path,
        "const.json",
        {"factors": [3], "mode": "periodic", "flag_type": [[1]], "periodic": {"period": 1.0, "terms": [{"harmonic": 0, "cos": [X]}]}},
    )
    assert _run("periodic", cfg, tmp_path / "p") == 0
    assert _run("components", CONFIGS / "projective_plane.json", tmp_path / "c") == 0
    per = _rows(tmp_path / "p" / "periodic_components.csv")
    auto = _rows(tmp_path / "c" / "components.csv")
    assert per == auto
    d = json.loads((tmp_path / "p" / "periodic.json").read_text())
    assert all(r["passed"] for r in d["decay"])


def test_periodic_zero_config(tmp_path):
    cfg = _write(
        tmp_path,
        "zero.json",
        {"factors": [3], "mode": "periodic", "periodic": {"period": 1.0, "terms": [{"harmonic": 0}]}},
    )
    assert _run("periodic", cfg, tmp_path) == 0
    assert len(_rows(tmp_path / "periodic_components.csv")) == 1


def test_periodic_coarse_steps_exit_2(tmp_path, capsys):
    cfg = _write(
        tmp_path,
        "stiff.json",
        {
            "factors": [2],
            "mode": "periodic",
            "periodic": {"period": 1.0, "steps": 100, "terms": [{"harmonic": 0, "cos": [[[40.0, 0.0], [0.0, -40.0]]]}]},
        },
    )
    assert _run("periodic", cfg, tmp_path) == 2
    assert "StepTooCoarse" in capsys.readouterr().err


@pytest.mark.parametrize(
    "data",
    [
        {"factors": [3], "generator": [[[1, 0], [0, -1]]]},
        {"factors": [2], "mode": "sideways", "generator": [[[1, 0], [0, -1]]]},
        {"factors": [2], "generator": [[[1, 0], [0, 1]]]},
        {"factors": [2], "generator": [[[1, 0], [0, -1]]], "tolerances": {"num": -1}},
        {"factors": [2]},
    ],
)
def test_bad_configs_exit_2(tmp_path, data, capsys):
    cfg = _write(tmp_path, "bad.json", data)
    assert _run("components", cfg, tmp_path) == 2
    assert "ConfigError" in capsys.readouterr().err


def test_negative_tol_override_exit_2(tmp_path):
    assert _run("decompose", CONFIGS / "projective_plane.json", tmp_path, "--tol", "-1") == 2


def test_ambiguous_clusters_exit_2(tmp_path, capsys):
    cfg = _write(
        tmp_path,
        "amb.json",
        {"factors": [3], "generator": [np.diag([1.0, 1.03, -2.03]).tolist()], "tolerances": {"cluster": 1e-2}},
    )
    assert _run("decompose", cfg, tmp_path) == 2
    assert "ClusterAmbiguity" in capsys.readouterr().err


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "flagflow", "components", str(CONFIGS / "torus.json"), "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "components.json").exists()
