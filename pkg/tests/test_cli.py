import json
import os

import numpy as np
import pytest

from softgrasp.cli import main
from softgrasp.mesh import read_mesh_json
from softgrasp.presets import PRESETS


def write_scene(tmp_path, doc, name="scene.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


# ---------------------------------------------------------------------------
# meshgen

def test_meshgen_writes_valid_mesh(tmp_path):
    out = tmp_path / "out"
    code = main(["meshgen", "--config", "builtin:cylinder_pull_small",
                 "--out", str(out)])
    assert code == 0
    mesh = read_mesh_json(out / "mesh.json")
    assert mesh.n_elements == 200
    assert "mesh ok" in (out / "mesh_validation.txt").read_text()


def test_meshgen_negative_radius_exit_2(tmp_path, capsys):
    doc = PRESETS["cylinder_pull_small"]()
    doc["object"]["dimensions"]["radius"] = -0.05
    cfg = write_scene(tmp_path, doc)
    code = main(["meshgen", "--config", cfg, "--out", str(tmp_path / "o")])
    assert code == 2
    assert "object.dimensions" in capsys.readouterr().err


def test_meshgen_no_clobber_exit_3(tmp_path):
    out = tmp_path / "out"
    assert main(["meshgen", "--config", "builtin:cylinder_pull_small",
                 "--out", str(out)]) == 0
    assert main(["meshgen", "--config", "builtin:cylinder_pull_small",
                 "--out", str(out)]) == 3
    assert main(["meshgen", "--config", "builtin:cylinder_pull_small",
                 "--out", str(out), "--force"]) == 0


def test_missing_config_exit_2(tmp_path):
    assert main(["meshgen", "--config", str(tmp_path / "nope.json"),
                 "--out", str(tmp_path / "o")]) == 2


def test_invalid_json_exit_2(tmp_path, capsys):
    cfg = tmp_path / "broken.json"
    cfg.write_text("{not json")
    assert main(["meshgen", "--config", str(cfg),
                 "--out", str(tmp_path / "o")]) == 2


# ---------------------------------------------------------------------------
# grasp-rigid

def test_grasp_rigid_13_levels_sphere(tmp_path):
    doc = PRESETS["sphere_squeeze"]()
    doc["sweep"]["levels"] = 13
    doc["sweep"]["actuation_forces"] = list(np.linspace(40.0, 160.0, 13))
    del doc["sweep"]["closure_depths"]
    cfg = write_scene(tmp_path, doc)
    out = tmp_path / "out"
    assert main(["grasp-rigid", "--config", cfg, "--out", str(out)]) == 0
    lines = (out / "grasp_rigid.csv").read_text().strip().split("\n")
    assert len(lines) == 14
    header = lines[0].split(",")
    i_feas = header.index("feasible")
    i_rf = header.index("force_residual_N")
    i_rm = header.index("moment_residual_Nm")
    for ln in lines[1:]:
        cells = ln.split(",")
        assert cells[i_feas] == "1"
        assert float(cells[i_rf]) < 1e-6
        assert float(cells[i_rm]) < 1e-6


def test_grasp_rigid_zero_friction_zero_bounds(tmp_path):
    doc = PRESETS["cylinder_pull_small"]()
    doc["contact"]["mu"] = 0.0
    doc["sweep"]["actuation_forces"] = [0.0, 20.0]
    cfg = write_scene(tmp_path, doc)
    out = tmp_path / "out"
    assert main(["grasp-rigid", "--config", cfg, "--out", str(out)]) == 0
    lines = (out / "grasp_rigid.csv").read_text().strip().split("\n")
    bounds = [float(ln.split(",")[-1]) for ln in lines[1:]]
    assert all(abs(b) < 1e-9 for b in bounds)


def test_grasp_rigid_missing_gripper_exit_2(tmp_path, capsys):
    doc = PRESETS["cylinder_pull_small"]()
    del doc["gripper"]
    cfg = write_scene(tmp_path, doc)
    assert main(["grasp-rigid", "--config", cfg,
                 "--out", str(tmp_path / "o")]) == 2
    assert "gripper" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# validate

def test_validate_ok(tmp_path):
    assert main(["validate", "--config", "builtin:cylinder_pull_small",
                 "--out", str(tmp_path / "o")]) == 0


def test_validate_safety_above_one_exit_2(tmp_path, capsys):
    doc = PRESETS["cylinder_pull_small"]()
    doc["sim"]["safety"] = 1.2
    cfg = write_scene(tmp_path, doc)
    assert main(["validate", "--config", cfg,
                 "--out", str(tmp_path / "o")]) == 2
    assert "sim.safety" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# grasp-fem (slow: real little runs)

def small_fem_doc(depths, pull_distance=0.0):
    doc = PRESETS["cylinder_pull_small"]()
    doc["object"]["resolution"] = {"radial": 2, "axial": 8}
    doc["sweep"]["levels"] = len(depths)
    doc["sweep"]["closure_depths"] = depths
    doc["sweep"]["pull"]["distance"] = pull_distance
    return doc


def test_grasp_fem_zero_closure_and_vtk(tmp_path):
    cfg = write_scene(tmp_path, small_fem_doc([0.0]))
    out = tmp_path / "out"
    assert main(["grasp-fem", "--config", cfg, "--out", str(out)]) == 0
    report = json.loads((out / "strain_report.json").read_text())
    assert report["max_indentation_m"] < 1e-6
    skin = (out / "skin_deformation.csv").read_text().strip().split("\n")
    for ln in skin[1:]:
        vals = [float(v) for v in ln.split(",")[1:]]
        for k in range(3):                 # zero closure: u below 1e-9 m
            assert abs(vals[k] - vals[k + 3]) < 1e-9
    frames = sorted(out.glob("frame_*.vtk"))
    assert frames
    text = frames[-1].read_text()
    assert "CELL_TYPES" in text
    assert "SCALARS e_max double 1" in text
    assert "VECTORS displacement double" in text


def test_grasp_fem_divergence_maps_to_exit_4(tmp_path, monkeypatch, capsys):
    from softgrasp import pipeline
    from softgrasp.errors import DivergenceError

    def boom(*args, **kwargs):
        raise DivergenceError(step_index=321, time=0.5)

    monkeypatch.setattr(pipeline, "run_indentation", boom)
    cfg = write_scene(tmp_path, small_fem_doc([0.004]))
    code = main(["grasp-fem", "--config", cfg, "--out", str(tmp_path / "o")])
    assert code == 4
    err = capsys.readouterr().err
    assert "321" in err


def test_pull_sweep_nonconvergence_maps_to_exit_4(tmp_path, monkeypatch,
                                                  capsys):
    from softgrasp import pipeline
    from softgrasp.errors import ConvergenceError

    def stall(*args, **kwargs):
        exc = ConvergenceError(energy_ratio=0.5, max_time=8.0)
        exc.engine = "fem"
        exc.level = 2
        raise exc

    monkeypatch.setattr(pipeline, "grip_tightness_sweep", stall)
    cfg = write_scene(tmp_path, small_fem_doc([0.004]))
    code = main(["pull-sweep", "--config", cfg, "--out", str(tmp_path / "o")])
    assert code == 4
    err = capsys.readouterr().err
    assert "fem" in err and "level 2" in err


def test_pull_sweep_single_level_two_rows(tmp_path):
    cfg = write_scene(tmp_path, small_fem_doc([0.006], pull_distance=0.006))
    out = tmp_path / "out"
    assert main(["pull-sweep", "--config", cfg, "--out", str(out),
                 "--deterministic"]) == 0
    lines = (out / "sweep.csv").read_text().strip().split("\n")
    assert lines[0].startswith("engine,level,")
    assert len(lines) == 3      # one rigid + one fem row
    assert {ln.split(",")[0] for ln in lines[1:]} == {"rigid", "fem"}
    summary = (out / "summary.txt").read_text()
    assert "fem level 1" in summary
