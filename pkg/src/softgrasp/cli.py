"""Command-line entry point.

Commands: meshgen, grasp-rigid, grasp-fem, pull-sweep, strain-report,
validate. Every command takes --config (a scene JSON path or
``builtin:<name>`` for a shipped scene) and --out (output directory).
Exit codes: 0 success, 2 configuration error, 3 filesystem refusal
(existing output without --force), 4 numerical failure (divergence,
non-convergence, element inversion).

``SOFTGRASP_THREADS`` caps the sweep worker count; ``--deterministic``
forces sequential execution (outputs are then byte-stable across runs).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import fem, pipeline
from .errors import (ConfigurationError, ConvergenceError, DivergenceError,
                     ElementInversionError, RigidPenetrationError)
from .mesh import validate_mesh, write_mesh_json, write_vtk
from .rigid import close_gripper, rigid_pull_test
from .scene import load_scene

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FILESYSTEM = 3
EXIT_NUMERICAL = 4


def _ensure_outputs(out_dir, names, force):
    os.makedirs(out_dir, exist_ok=True)
    paths = [os.path.join(out_dir, n) for n in names]
    if not force:
        for p in paths:
            if os.path.exists(p):
                raise FileExistsError(p)
    return paths


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    x = float(x)
    if x == 0.0:
        x = 0.0
    return "%.10e" % x


def cmd_meshgen(args):
    scene = load_scene(args.config)
    (mesh_path, report_path) = _ensure_outputs(
        args.out, ["mesh.json", "mesh_validation.txt"], args.force)
    mesh = scene.build_mesh()
    report = validate_mesh(mesh)
    write_mesh_json(mesh, mesh_path)
    with open(report_path, "w") as fh:
        fh.write(report.summary() + "\n")
    print(report.summary())
    print("mesh written to %s" % mesh_path)
    return EXIT_OK if report.ok else EXIT_NUMERICAL


def _actuation_levels(scene):
    if scene.sweep.actuation_forces is not None:
        return np.asarray(scene.sweep.actuation_forces, dtype=float)
    return np.linspace(0.0, 40.0, scene.sweep.levels)


def cmd_grasp_rigid(args):
    scene = load_scene(args.config)
    (csv_path,) = _ensure_outputs(args.out, ["grasp_rigid.csv"], args.force)
    primitive = scene.build_primitive()
    mu = scene.contact.mu
    if mu is None:
        mu = scene.materials[scene.object_material].friction
    acts = _actuation_levels(scene)
    states = close_gripper(scene.gripper, primitive, acts, mu,
                           gravity=scene.gravity, thumb_link=scene.thumb_link)
    lines = ["level,actuation_N,thumb_fn_N,total_fn_N,feasible,"
             "force_residual_N,moment_residual_Nm,pull_bound_N"]
    for s in states:
        bound = rigid_pull_test(s, scene.sweep.pull_direction, mu,
                                obj_mass=primitive.mass, gravity=scene.gravity)
        lines.append(",".join([
            str(s.level), _fmt(s.actuation), _fmt(s.thumb_normal_force),
            _fmt(s.total_normal_force), _fmt(bool(s.feasible)),
            _fmt(s.residual_force), _fmt(s.residual_moment), _fmt(bound)]))
    with open(csv_path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print("wrote %d grasp levels to %s" % (len(states), csv_path))
    return EXIT_OK


def _fem_single_run(scene, on_interval=None):
    """Indentation at the deepest sweep level (the tightest grip)."""
    mesh = scene.build_mesh()
    materials = scene.material_table()
    primitive = scene.build_primitive()
    depth = float(scene.closure_depths()[-1])
    row, indent, pull = pipeline._fem_level(
        scene, mesh, materials, scene.sweep.levels, depth, primitive,
        on_interval=on_interval)
    return mesh, indent, pull, row


def cmd_grasp_fem(args):
    scene = load_scene(args.config)
    (contact_csv, strain_path, skin_csv) = _ensure_outputs(
        args.out, ["contacts.csv", "strain_report.json",
                   "skin_deformation.csv"], args.force)

    mesh = scene.build_mesh()
    materials = scene.material_table()
    primitive = scene.build_primitive()
    depth = float(scene.closure_depths()[-1])
    from .rigid import GraspState, closure_for_depth
    q = closure_for_depth(scene.gripper, primitive, depth)
    gs = GraspState(q=q, contacts=[], actuation=0.0)
    traj = pipeline.export_hand_trajectory(
        [gs], scene.sweep.closure_duration,
        {"direction": scene.sweep.pull_direction, "distance": 0.0},
        hold_duration=scene.sweep.hold_duration,
        sample_dt=scene.sim.output_interval,
        base_pose=scene.gripper.base_pose)
    k_n, k_t, mu = scene.contact_parameters(mesh)

    vtk_index = [0]
    history = []

    def on_interval(rec, state, contacts):
        path = os.path.join(args.out, "frame_%04d.vtk" % vtk_index[0])
        if args.force or not os.path.exists(path):
            write_vtk(mesh, {"displacement": state.u},
                      {"e_max": fem.max_principal_strain_field(mesh, state)},
                      path)
        vtk_index[0] += 1
        history.append((rec.time, rec.contacts,
                        {i: n for i, n in
                         enumerate(scene.gripper.pad_links())}))

    try:
        indent = pipeline.run_indentation(
            mesh, materials, scene.gripper, traj,
            thumb_link=scene.thumb_link, k_n=k_n, k_t=k_t, mu=mu,
            gravity=scene.gravity,
            constraints=scene.restraint_constraints(mesh),
            activation_tolerance=scene.contact.activation_tolerance,
            safety=scene.sim.safety,
            output_interval=scene.sim.output_interval,
            relax_max_time=scene.sim.max_time,
            pull_direction=scene.sweep.pull_direction,
            on_interval=on_interval)
    except (DivergenceError, ConvergenceError) as exc:
        trace_path = os.path.join(args.out, "energy_trace.csv")
        with open(trace_path, "w") as fh:
            fh.write("time_s,kinetic_J,strain_J\n")
            for t, c, _ in history:
                fh.write("%s\n" % _fmt(t))
        print("numerical failure: %s (energy trace: %s)" % (exc, trace_path),
              file=sys.stderr)
        return EXIT_NUMERICAL

    pipeline.write_contact_history_csv(history, contact_csv)
    pipeline.write_skin_deformation_csv(mesh, indent.state, skin_csv)
    report = pipeline.strain_report(mesh, indent.state, indent.contacts)
    doc = {
        "global_max_principal_strain": report.global_max,
        "argmax_element": int(report.argmax_element),
        "argmax_location_m": report.argmax_location.tolist(),
        "contact_zone_mean": report.contact_zone_mean,
        "far_zone_mean": report.far_zone_mean,
        "thumb_normal_N": indent.thumb_normal,
        "total_normal_N": indent.total_normal,
        "max_indentation_m": indent.max_indentation(),
        "closure_depth_m": depth,
    }
    with open(strain_path, "w") as fh:
        json.dump(doc, fh, indent=2)
    print("indented state: thumb %.3f N, total %.3f N, %d VTK frames"
          % (indent.thumb_normal, indent.total_normal, vtk_index[0]))
    return EXIT_OK


def cmd_pull_sweep(args):
    scene = load_scene(args.config)
    (csv_path, summary_path) = _ensure_outputs(
        args.out, ["sweep.csv", "summary.txt"], args.force)
    workers = int(os.environ.get("SOFTGRASP_THREADS", "1"))
    if args.deterministic:
        workers = 1

    def progress(engine, level, total, row):
        print("[%s %d/%d] thumb %.3f N lateral %.3f N"
              % (engine, level, total, row.thumb_fn, row.lateral),
              flush=True)

    try:
        results = pipeline.grip_tightness_sweep(
            scene, engines=("rigid", "fem"), progress=progress,
            workers=workers)
    except ConvergenceError as exc:
        engine = getattr(exc, "engine", "fem")
        level = getattr(exc, "level", -1)
        print("numerical failure in %s engine at level %d: %s"
              % (engine, level, exc), file=sys.stderr)
        return EXIT_NUMERICAL

    pipeline.write_sweep_csv(results, csv_path)
    lines = ["grasp-and-pull sweep summary",
             "level pairing by thumb normal force (10% tolerance)"]
    rigid_rows = {r.level: r for r in results["rigid"].rows}
    for fr in results["fem"].rows:
        if fr.matched_level is None:
            lines.append("fem level %d (thumb %.3f N): unmatched"
                         % (fr.level, fr.thumb_fn))
            continue
        rr = rigid_rows[fr.matched_level]
        fem_ratio = fr.lateral / fr.total_fn if fr.total_fn > 0 else 0.0
        rig_ratio = rr.lateral / rr.total_fn if rr.total_fn > 0 else 0.0
        winner = "fem" if fem_ratio > rig_ratio else "rigid"
        lines.append(
            "fem level %d <-> rigid level %d: lateral/normal fem %.4f, "
            "rigid %.4f -> %s resists better"
            % (fr.level, fr.matched_level, fem_ratio, rig_ratio, winner))
    with open(summary_path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print("wrote %s and %s" % (csv_path, summary_path))
    return EXIT_OK


def cmd_strain_report(args):
    scene = load_scene(args.config)
    (strain_path, vtk_path) = _ensure_outputs(
        args.out, ["strain_report.json", "strain.vtk"], args.force)
    try:
        mesh, indent, pull, row = _fem_single_run(scene)
    except (DivergenceError, ConvergenceError) as exc:
        print("numerical failure: %s" % exc, file=sys.stderr)
        return EXIT_NUMERICAL
    report = pipeline.strain_report(mesh, indent.state, indent.contacts)
    doc = {
        "global_max_principal_strain": report.global_max,
        "argmax_element": int(report.argmax_element),
        "argmax_location_m": report.argmax_location.tolist(),
        "contact_zone_mean": report.contact_zone_mean,
        "far_zone_mean": report.far_zone_mean,
        "zone_ratio": (report.contact_zone_mean / report.far_zone_mean
                       if report.far_zone_mean else None),
    }
    with open(strain_path, "w") as fh:
        json.dump(doc, fh, indent=2)
    write_vtk(mesh, {"displacement": indent.state.u},
              {"e_max": report.e_max}, vtk_path)
    print("max principal strain %.4f at element %d"
          % (report.global_max, report.argmax_element))
    return EXIT_OK


def cmd_validate(args):
    scene = load_scene(args.config)
    mesh = scene.build_mesh()
    report = validate_mesh(mesh)
    print(report.summary())
    from .rigid import forward_kinematics
    forward_kinematics(scene.gripper, scene.gripper.zero_q())
    print("gripper kinematics: %d links, %d joints, pads on %s"
          % (len(scene.gripper.links), len(scene.gripper.joint_names()),
             ", ".join(scene.gripper.pad_links())))
    return EXIT_OK if report.ok else EXIT_NUMERICAL


def build_parser():
    parser = argparse.ArgumentParser(
        prog="softgrasp",
        description="Grasp-and-pull stability analysis on deformable "
                    "phantoms: rigid grasp statics plus explicit FEM.")
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "meshgen": (cmd_meshgen, "generate and validate the phantom mesh"),
        "grasp-rigid": (cmd_grasp_rigid,
                        "rigid grasp ladder with pull bounds"),
        "grasp-fem": (cmd_grasp_fem,
                      "FEM indentation run with VTK series and strain report"),
        "pull-sweep": (cmd_pull_sweep,
                       "two-engine grasp-and-pull tightness sweep"),
        "strain-report": (cmd_strain_report,
                          "FEM indentation strain summary"),
        "validate": (cmd_validate, "validate scene config and mesh"),
    }
    for name, (func, help_text) in commands.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True,
                       help="scene JSON path or builtin:<name>")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--force", action="store_true",
                       help="overwrite existing outputs")
        p.add_argument("--deterministic", action="store_true",
                       help="force sequential execution")
        p.set_defaults(func=func)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileExistsError as exc:
        print("refusing to overwrite %s (use --force)" % exc,
              file=sys.stderr)
        return EXIT_FILESYSTEM
    except FileNotFoundError as exc:
        print("missing input: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigurationError, ValueError) as exc:
        print("configuration error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG
    except (DivergenceError, ConvergenceError, ElementInversionError,
            RigidPenetrationError) as exc:
        print("numerical failure: %s" % exc, file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
