"""Rigid-to-FEM handoff and the grasp-and-pull stability sweep.

Only kinematics crosses the engine boundary: the rigid engine produces a
time-stamped trajectory of base pose and joint values, and the FEM engine
replays it, posing the gripper pad surfaces by forward kinematics at every
step. Forces never cross; each engine computes its own.

One sweep level runs closure (pads move to the level's configuration),
hold plus dynamic relaxation (the indented state), then a constant-rate
base translation along the pull direction (quasi-static pull). Per level
the sweep records the grip tightness (thumb-link normal force at the
indented state), the aggregate normal force, and the lateral force at pull
end: the magnitude of the pull-direction component of the total contact
reaction, which includes tilted-surface normal contributions that a rigid
point-contact model cannot produce. The rigid engine's lateral value is
its Coulomb sliding bound at matched tightness.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from . import fem
from .contact import PenaltyContact, gripper_reaction, kkt_residuals
from .errors import ConfigurationError, ConvergenceError
from .fem import SimState
from .rigid import (close_gripper, closure_for_depth, find_contact_points,
                    forward_kinematics, rigid_pull_test)
from .rigid import _squeeze_distribution
from .transforms import Pose, rotation_about_axis

__all__ = [
    "HandTrajectory", "TrajectorySample", "SweepRow", "SweepResult",
    "IndentationResult", "PullHistory", "StrainReport",
    "export_hand_trajectory", "run_indentation", "run_pull",
    "project_contact_force", "grip_tightness_sweep", "detect_slip",
    "strain_report", "write_sweep_csv", "write_contact_history_csv",
    "write_skin_deformation_csv",
]


@dataclass
class TrajectorySample:
    t: float
    p_h: np.ndarray
    R_h: np.ndarray
    q_h: np.ndarray


@dataclass(eq=False)
class HandTrajectory:
    """Piecewise-linear (p_h, R_h, q_h) samples with phase boundaries."""

    samples: list
    closure_end: float = 0.0
    hold_end: float = 0.0

    def __post_init__(self):
        times = np.array([s.t for s in self.samples])
        if len(times) < 2 or np.any(np.diff(times) <= 0.0):
            raise ValueError("trajectory times must be strictly increasing")
        for s in self.samples:
            err = float(np.abs(s.R_h.T @ s.R_h - np.eye(3)).max())
            if err > 1e-9:
                raise ValueError("trajectory rotation is not orthonormal")
        self._times = times
        # per-segment relative rotation vectors for slerp
        self._rotvecs = []
        for a, b in zip(self.samples, self.samples[1:]):
            rel = a.R_h.T @ b.R_h
            angle = np.arccos(np.clip((np.trace(rel) - 1.0) / 2.0, -1.0, 1.0))
            if angle < 1e-12:
                self._rotvecs.append(np.zeros(3))
            else:
                axis = np.array([rel[2, 1] - rel[1, 2],
                                 rel[0, 2] - rel[2, 0],
                                 rel[1, 0] - rel[0, 1]])
                self._rotvecs.append(angle * axis / np.linalg.norm(axis))

    @property
    def t_end(self):
        return float(self._times[-1])

    def interpolate(self, t):
        """(p_h, R_h, q_h) at time t (clamped to the sampled range)."""
        t = float(np.clip(t, self._times[0], self._times[-1]))
        k = int(np.searchsorted(self._times, t, side="right") - 1)
        k = min(k, len(self.samples) - 2)
        a, b = self.samples[k], self.samples[k + 1]
        w = (t - a.t) / (b.t - a.t)
        p = (1.0 - w) * a.p_h + w * b.p_h
        q = (1.0 - w) * a.q_h + w * b.q_h
        rv = self._rotvecs[k]
        angle = np.linalg.norm(rv)
        R = a.R_h if angle < 1e-12 else \
            a.R_h @ rotation_about_axis(rv / angle, w * angle)
        return p, R, q


def export_hand_trajectory(grasp_states, closure_duration, pull, *,
                           hold_duration=0.1, sample_dt=0.01, level=None,
                           base_pose=None, q_open=None):
    """Trajectory for one tightness level: close, hold, pull.

    grasp_states: nonempty list of rigid grasp states; ``level`` picks one
    (default the last). pull: {"direction", "distance", "duration"}.
    The closure phase ramps the joints linearly from ``q_open`` (default
    zeros) to the level's configuration; the hold phase freezes everything;
    the pull phase translates the base by distance along direction.
    """
    if not grasp_states:
        raise ValueError("grasp_states must be nonempty")
    if closure_duration <= 0.0:
        raise ValueError("closure duration must be positive")
    state = grasp_states[-1 if level is None else level]
    q_goal = np.asarray(state.q, dtype=float)
    q0 = np.zeros_like(q_goal) if q_open is None else np.asarray(q_open, float)

    direction = np.asarray(pull["direction"], dtype=float)
    n = np.linalg.norm(direction)
    if n > 0.0:
        direction = direction / n
    distance = float(pull["distance"])
    pull_duration = float(pull.get("duration") or 0.0)
    if distance > 0.0 and pull_duration <= 0.0:
        raise ValueError("pull duration must be positive for a nonzero pull")

    if base_pose is None:
        base_pose = Pose.identity()
    p0, R0 = base_pose.p, base_pose.R

    t_c = float(closure_duration)
    t_h = t_c + float(hold_duration)
    t_e = t_h + (pull_duration if distance > 0.0 else 0.0)

    knots = {0.0, t_c, t_h, t_e}
    knots.update(np.arange(0.0, t_e, sample_dt).tolist())
    samples = []
    for t in sorted(knots):
        if t > t_e + 1e-12:
            continue
        if t <= t_c:
            q = q0 + (t / t_c) * (q_goal - q0)
            p = p0
        elif t <= t_h:
            q = q_goal
            p = p0
        else:
            q = q_goal
            w = (t - t_h) / (t_e - t_h)
            p = p0 + w * distance * direction
        samples.append(TrajectorySample(t=float(t), p_h=np.asarray(p, float),
                                        R_h=np.asarray(R0, float).copy(),
                                        q_h=q.copy()))
    return HandTrajectory(samples=samples, closure_end=t_c, hold_end=t_h)


def project_contact_force(force, normal):
    """Split a contact force into normal and tangential parts.

    f_n = n (n . f); f_mu = f - f_n, so f_n + f_mu reconstructs the input
    exactly. The normal must be unit length to 1e-9.
    """
    normal = np.asarray(normal, dtype=float).reshape(3)
    if abs(np.linalg.norm(normal) - 1.0) > 1e-9:
        raise ValueError("contact normal must be unit length")
    force = np.asarray(force, dtype=float).reshape(3)
    f_n = normal * (normal @ force)
    return f_n, force - f_n


# ---------------------------------------------------------------------------
# FEM-side driver

@dataclass
class HistoryRecord:
    time: float
    phase: str
    base_displacement: float
    total_normal: float
    thumb_normal: float
    lateral: float
    mean_slip: float
    kinetic_energy: float
    strain_energy: float
    per_link: dict
    kkt: object
    n_contacts: int
    contacts: list = field(default_factory=list)


@dataclass(eq=False)
class _GraspSim:
    """Explicit FEM run with gripper surfaces driven by a hand trajectory."""

    mesh: object
    materials: dict
    gripper: object
    trajectory: HandTrajectory
    thumb_link: str
    k_n: float
    k_t: float
    mu: float
    activation_tolerance: float = 0.0
    gravity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    constraints: list = field(default_factory=list)
    safety: float = 0.9
    output_interval: float = 0.01
    pull_direction: np.ndarray = field(
        default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    on_interval: object = None          # callback(record, state, contacts)

    def __post_init__(self):
        self.pad_names = self.gripper.pad_links()
        self.link_of_surface = {i: n for i, n in enumerate(self.pad_names)}
        self.mass = fem.lumped_mass(self.mesh, self.materials)
        self.damping = fem.lumped_damping(self.mesh, self.materials)
        self.f_ext = fem.external_forces(self.mesh, self.materials,
                                         self.gravity)
        boundary = self.mesh.boundary_nodes()
        surfaces = [(self.gripper.link(n).pad, Pose.identity())
                    for n in self.pad_names]
        self.tracker = PenaltyContact(
            surfaces, k_n=self.k_n, k_t=self.k_t, mu=self.mu,
            activation_tolerance=self.activation_tolerance,
            candidate_ids=boundary, link_of_surface=self.link_of_surface)
        self.state = SimState.zero(self.mesh.n_nodes)
        for c in self.constraints:
            c.apply(self.state)
        self._set_poses(0.0)
        self.tracker._prev_poses = list(self.tracker.poses)
        self.dt = min(fem.driver_timestep(self.mesh, self.materials, self.safety),
                      self.tracker.stable_timestep(self.mass[boundary],
                                                   self.safety))
        self.records = []
        self.contacts = []
        self.step_count = 0
        self._next_output = 0.0
        self._dt_check_every = 500
        self._pull_anchor_snapshot = None
        self._pull_start_base = None
        self._ever_contacted = False

    def _set_poses(self, t):
        p, R, q = self.trajectory.interpolate(t)
        self._base_p = p
        poses = forward_kinematics(self.gripper, q, base_pose=Pose(R, p))
        self.tracker.set_poses([poses[n] for n in self.pad_names])

    def pad_poses(self):
        return {n: p for n, p in zip(self.pad_names, self.tracker.poses)}

    def _record(self, phase):
        per_link = gripper_reaction(self.contacts, self.link_of_surface)
        total_n = sum(v["normal_sum"] for v in per_link.values())
        thumb_n = per_link.get(self.thumb_link, {"normal_sum": 0.0})["normal_sum"]
        total_force = sum((c.force for c in self.contacts), np.zeros(3))
        lateral = abs(float(self.pull_direction @ total_force))
        rec = HistoryRecord(
            time=self.state.t, phase=phase,
            base_displacement=self._base_displacement(),
            total_normal=total_n, thumb_normal=thumb_n, lateral=lateral,
            mean_slip=self._mean_slip(),
            kinetic_energy=fem.kinetic_energy(self.mass, self.state.v),
            strain_energy=fem.strain_energy(self.mesh, self.state,
                                            self.materials),
            per_link=per_link, kkt=kkt_residuals(self.contacts, self.state.v),
            n_contacts=len(self.contacts),
            contacts=copy.deepcopy(self.contacts))
        self.records.append(rec)
        if self.on_interval is not None:
            self.on_interval(rec, self.state, self.contacts)
        return rec

    def _base_displacement(self):
        if self._pull_start_base is None:
            return 0.0
        return float(self.pull_direction @ (self._base_p - self._pull_start_base))

    def mark_pull_start(self):
        self._pull_anchor_snapshot = dict(self.tracker._anchors)
        self._pull_start_base = self._base_p.copy()

    def _mean_slip(self):
        """Mean tangential displacement of contact nodes w.r.t. their
        pull-start pad anchors."""
        snap = self._pull_anchor_snapshot
        if not snap:
            return 0.0
        positions = self.mesh.nodes + self.state.u
        vals = []
        for c in self.contacts:
            key = (c.surface_id, c.node_id)
            local = snap.get(key)
            if local is None:
                continue
            anchor = self.tracker.poses[c.surface_id].apply(local)
            rel = positions[c.node_id] - anchor
            rel_t = rel - (rel @ c.normal) * c.normal
            vals.append(np.linalg.norm(rel_t))
        return float(np.mean(vals)) if vals else 0.0

    def _step(self, phase):
        f_int, se = fem.internal_forces_and_energy(self.mesh, self.state,
                                                   self.materials)
        positions = self.mesh.nodes + self.state.u
        f_con, self.contacts = self.tracker.forces(positions, self.state.v,
                                                   self.dt)
        if self.contacts:
            self._ever_contacted = True
        self.state = fem.step_explicit(self.state, self.mass, self.f_ext,
                                       f_int, f_con, self.dt,
                                       self.constraints, self.damping,
                                       step_index=self.step_count)
        self.step_count += 1
        ke = fem.kinetic_energy(self.mass, self.state.v)
        if self.state.t >= self._next_output:
            self._record(phase)
            self._next_output += self.output_interval
        if self.step_count % self._dt_check_every == 0:
            crit = fem.estimate_critical_timestep(self.mesh, self.materials,
                                                  self.state, iters=15)
            self.dt = min(self.dt, 0.9 * self.safety * crit)
        return ke, se

    def advance_to(self, t_end, phase):
        while self.state.t < t_end - 1e-12:
            self._set_poses(min(self.state.t + self.dt, t_end))
            self._step(phase)

    def relax(self, max_time, energy_ratio=1e-4, phase="relax"):
        """Dynamic relaxation with frozen surfaces (the quasi-static state)."""
        self.tracker.set_poses(list(self.tracker.poses))   # zero surface vel
        start = self.state.t
        quiet = (not self._ever_contacted and np.all(self.f_ext == 0.0)
                 and float(np.abs(self.state.u).max(initial=0.0)) < 1e-12
                 and float(np.abs(self.state.v).max(initial=0.0)) < 1e-12)
        if quiet:
            self._record(phase)
            return self.state
        ratio = np.inf
        while self.state.t - start < max_time:
            ke, se = self._step(phase)
            if se > 0.0 and ke > 0.0:
                ratio = ke / se
                if ratio < energy_ratio:
                    self._record(phase)
                    return self.state
        raise ConvergenceError(energy_ratio=float(ratio), max_time=max_time)


@dataclass
class IndentationResult:
    """Quasi-static indented state plus the live driver for the pull."""

    state: SimState
    contacts: list
    per_link: dict
    sim: _GraspSim

    @property
    def thumb_normal(self):
        return self.per_link.get(self.sim.thumb_link,
                                 {"normal_sum": 0.0})["normal_sum"]

    @property
    def total_normal(self):
        return sum(v["normal_sum"] for v in self.per_link.values())

    def max_indentation(self):
        return max((-c.gap for c in self.contacts), default=0.0)


def run_indentation(mesh, materials, gripper, trajectory, *, thumb_link,
                    k_n, k_t, mu, gravity=(0.0, 0.0, 0.0), constraints=(),
                    activation_tolerance=0.0, safety=0.9,
                    output_interval=0.01, relax_max_time=4.0,
                    energy_ratio=1e-4, pull_direction=(0.0, 0.0, 1.0),
                    on_interval=None):
    """Closure + hold + dynamic relaxation to the indented state.

    Replays the closure and hold phases of the trajectory (pad surfaces
    posed by forward kinematics each step), then relaxes with frozen pads
    until the kinetic energy drops below 1e-4 of the strain energy.
    Returns the indented state with the final contact set and per-link
    reactions; the embedded driver continues into :func:`run_pull`.
    """
    sim = _GraspSim(mesh=mesh, materials=dict(materials), gripper=gripper,
                    trajectory=trajectory, thumb_link=thumb_link, k_n=k_n,
                    k_t=k_t, mu=mu,
                    activation_tolerance=activation_tolerance,
                    gravity=np.asarray(gravity, dtype=float),
                    constraints=list(constraints), safety=safety,
                    output_interval=output_interval,
                    pull_direction=np.asarray(pull_direction, dtype=float),
                    on_interval=on_interval)
    sim.advance_to(trajectory.closure_end, "closure")
    sim.advance_to(trajectory.hold_end, "hold")
    sim.relax(relax_max_time, energy_ratio=energy_ratio)
    per_link = gripper_reaction(sim.contacts, sim.link_of_surface)
    return IndentationResult(state=sim.state.copy(), contacts=list(sim.contacts),
                             per_link=per_link, sim=sim)


@dataclass
class PullHistory:
    """Per-interval records of the pull phase plus final aggregates."""

    records: list
    pull_distance: float
    final_contacts: list
    final_per_link: dict
    lateral_end: float
    total_normal_end: float
    quasistatic_ok: bool
    final_state: SimState = None
    link_of_surface: dict = field(default_factory=dict)

    def times(self):
        return np.array([r.time for r in self.records])

    def base_displacements(self):
        return np.array([r.base_displacement for r in self.records])

    def mean_slips(self):
        return np.array([r.mean_slip for r in self.records])

    def laterals(self):
        return np.array([r.lateral for r in self.records])


def run_pull(indentation, trajectory, *, max_ke_fraction=0.01, retries=2,
             slip_threshold=1e-3):
    """Pull phase: base translation along the pull direction.

    The pull must stay quasi-static (kinetic energy below
    ``max_ke_fraction`` of strain energy) while the grasp is still stuck;
    once macroscopic slip starts the response is inherently dynamic and
    exempt from the check. A violating pull reruns from the indented state
    with the duration doubled, up to ``retries`` times, and the result is
    flagged if still violated.
    """
    base_sim = indentation.sim
    t_h = trajectory.hold_end
    t_e = trajectory.t_end
    if t_e <= t_h + 1e-12:
        per_link = dict(indentation.per_link)
        total_force = sum((c.force for c in indentation.contacts), np.zeros(3))
        lateral = abs(float(base_sim.pull_direction @ total_force))
        return PullHistory(records=[], pull_distance=0.0,
                           final_contacts=list(indentation.contacts),
                           final_per_link=per_link,
                           lateral_end=lateral,
                           total_normal_end=indentation.total_normal,
                           quasistatic_ok=True,
                           final_state=indentation.state.copy(),
                           link_of_surface=dict(base_sim.link_of_surface))

    duration = t_e - t_h
    attempt = 0
    while True:
        sim = copy.deepcopy(base_sim)
        sim.on_interval = None      # trial runs must not re-fire callbacks
        p0, R0, q0 = trajectory.interpolate(t_h)
        p1, _, _ = trajectory.interpolate(t_e)
        t0 = sim.state.t
        stretched = _retimed_pull(trajectory, t_h, duration, t0)
        sim.trajectory = stretched
        sim.mark_pull_start()
        start_records = len(sim.records)
        sim.advance_to(stretched.t_end, "pull")
        records = sim.records[start_records:] + [sim._record("pull_end")]
        worst = max((r.kinetic_energy / r.strain_energy
                     for r in records
                     if r.strain_energy > 0.0 and r.mean_slip < slip_threshold),
                    default=0.0)
        ok = worst <= max_ke_fraction
        if ok or attempt >= retries:
            per_link = gripper_reaction(sim.contacts, sim.link_of_surface)
            total_force = sum((c.force for c in sim.contacts), np.zeros(3))
            lateral = abs(float(sim.pull_direction @ total_force))
            total_n = sum(v["normal_sum"] for v in per_link.values())
            return PullHistory(records=records,
                               pull_distance=float(np.linalg.norm(p1 - p0)),
                               final_contacts=list(sim.contacts),
                               final_per_link=per_link, lateral_end=lateral,
                               total_normal_end=total_n, quasistatic_ok=ok,
                               final_state=sim.state.copy(),
                               link_of_surface=dict(sim.link_of_surface))
        duration *= 2.0
        attempt += 1


def _retimed_pull(trajectory, t_h, duration, t0):
    """Pull-only trajectory starting at sim time t0 with a new duration."""
    p0, R0, q0 = trajectory.interpolate(t_h)
    p1, R1, q1 = trajectory.interpolate(trajectory.t_end)
    n = max(int(np.ceil(duration / 0.01)), 2)
    ts = np.linspace(0.0, duration, n + 1)
    samples = [TrajectorySample(t=t0 + t,
                                p_h=p0 + (t / duration) * (p1 - p0),
                                R_h=R0.copy(),
                                q_h=q0 + (t / duration) * (q1 - q0))
               for t in ts]
    return HandTrajectory(samples=samples, closure_end=t0, hold_end=t0)


def detect_slip(pull_history, threshold=1e-3):
    """Slip when the mean tangential contact displacement w.r.t. the
    pull-start anchors crosses the threshold; onset is the base
    displacement at the first crossing."""
    if threshold is None:
        threshold = 1e-3
    slips = pull_history.mean_slips()
    if len(slips) == 0 or not np.isfinite(threshold):
        return {"slipped": False, "onset_displacement": None}
    crossing = np.flatnonzero(slips >= threshold)
    if len(crossing) == 0:
        return {"slipped": False, "onset_displacement": None}
    onset = pull_history.base_displacements()[crossing[0]]
    return {"slipped": True, "onset_displacement": float(onset)}


@dataclass
class StrainReport:
    e_max: np.ndarray                 # per element, centroid evaluation
    global_max: float
    argmax_element: int
    argmax_location: np.ndarray
    contact_zone_mean: float | None = None
    far_zone_mean: float | None = None
    contact_zone_elements: np.ndarray | None = None


def strain_report(mesh, state, contacts=None):
    """Per-element maximum principal strain with zone statistics.

    With a contact set, elements whose centroid lies within two mean
    element lengths of any active contact node form the contact zone; the
    report compares its mean against the remaining (far) elements.
    """
    from . import hexahedron as hexa
    field_vals = fem.max_principal_strain_field(mesh, state)
    centroids = mesh.nodes[mesh.elements].mean(axis=1)
    k = int(np.argmax(field_vals))
    report = StrainReport(e_max=field_vals, global_max=float(field_vals[k]),
                          argmax_element=k, argmax_location=centroids[k])
    if contacts:
        # element length for the zone radius: mean volumetric diameter
        length = float(np.mean(np.cbrt(
            hexa.element_volumes(mesh.element_coords()))))
        nodes = np.array(sorted({c.node_id for c in contacts}))
        pos = mesh.nodes[nodes] + state.u[nodes]
        d = np.min(np.linalg.norm(centroids[:, None, :] - pos[None, :, :],
                                  axis=2), axis=1)
        zone = d <= 2.0 * length
        report.contact_zone_elements = np.flatnonzero(zone)
        if zone.any():
            report.contact_zone_mean = float(field_vals[zone].mean())
        if (~zone).any():
            report.far_zone_mean = float(field_vals[~zone].mean())
    return report


# ---------------------------------------------------------------------------
# the two-engine sweep

@dataclass
class SweepRow:
    engine: str
    level: int
    thumb_fn: float            # grip tightness: thumb-link normal force
    total_fn: float            # aggregate |f_n| at pull end
    lateral: float             # pull-direction contact reaction at pull end
    slipped: bool
    onset: float | None
    depth: float | None = None
    matched_level: int | None = None
    quasistatic_ok: bool = True
    total_fn_indented: float | None = None


@dataclass
class SweepResult:
    engine: str
    rows: list


def _fem_level(scene, mesh, materials, level, depth, primitive,
               slip_threshold=1e-3, on_interval=None):
    from .rigid import GraspState
    gripper = scene.gripper
    q_level = closure_for_depth(gripper, primitive, depth)
    gs = GraspState(q=q_level, contacts=[], actuation=0.0, level=level)
    pull_duration = scene.sweep.pull_duration or _pull_duration_estimate(
        scene, materials, depth)
    traj = export_hand_trajectory(
        [gs], scene.sweep.closure_duration,
        {"direction": scene.sweep.pull_direction,
         "distance": scene.sweep.pull_distance,
         "duration": pull_duration},
        hold_duration=scene.sweep.hold_duration,
        sample_dt=scene.sim.output_interval,
        base_pose=gripper.base_pose)
    k_n, k_t, mu = scene.contact_parameters(mesh)
    constraints = scene.restraint_constraints(mesh)
    indent = run_indentation(
        mesh, materials, gripper, traj, thumb_link=scene.thumb_link,
        k_n=k_n, k_t=k_t, mu=mu, gravity=scene.gravity,
        constraints=constraints,
        activation_tolerance=scene.contact.activation_tolerance,
        safety=scene.sim.safety, output_interval=scene.sim.output_interval,
        relax_max_time=scene.sim.max_time,
        pull_direction=scene.sweep.pull_direction, on_interval=on_interval)
    pull = run_pull(indent, traj, slip_threshold=slip_threshold)
    slip = detect_slip(pull, slip_threshold)
    # tightness metric (thumb) is taken at the indented state; the normal
    # and lateral aggregates are paired at pull end, Fig.-8 style
    row = SweepRow(engine="fem", level=level,
                   thumb_fn=float(indent.thumb_normal),
                   total_fn=float(pull.total_normal_end),
                   lateral=float(pull.lateral_end),
                   slipped=slip["slipped"], onset=slip["onset_displacement"],
                   depth=float(depth), quasistatic_ok=pull.quasistatic_ok,
                   total_fn_indented=float(indent.total_normal))
    return row, indent, pull


def _pull_duration_estimate(scene, materials, depth):
    """Pull slowly enough that inertia stays negligible (quasi-static)."""
    mat = next(iter(materials.values()))
    c = mat.dilatational_wave_speed
    # pad speed well below the wave speed scaled by the expected strain level
    radius = scene.object_dimensions.get("radius", 0.05)
    strain = max(depth / radius, 0.02)
    v = 0.02 * c * strain
    return float(np.clip(scene.sweep.pull_distance / max(v, 1e-6), 0.2, 4.0))


def _sweep_level_task(payload):
    """Top-level worker for parallel sweep levels (must be picklable)."""
    scene, level, depth, slip_threshold = payload
    mesh = scene.build_mesh()
    materials = scene.material_table()
    primitive = scene.build_primitive()
    row, _, _ = _fem_level(scene, mesh, materials, level, depth, primitive,
                           slip_threshold)
    return row


def grip_tightness_sweep(scene, levels=None, engines=("rigid", "fem"),
                         slip_threshold=1e-3, progress=None, keep_runs=False,
                         workers=1):
    """Run the grasp-and-pull protocol in both engines and pair the levels.

    FEM levels are driven by prescribed closure depths; the rigid engine's
    actuation forces are taken from the scene if given, otherwise derived
    so its thumb normal force reproduces the measured FEM values (the
    "similar normal contact force" pairing). Levels are matched by nearest
    thumb-normal within 10%.

    ``workers`` > 1 runs FEM levels in separate processes (levels are
    independent; results are assembled in level order, so the output is
    identical to a sequential run).

    Returns {"fem": SweepResult, "rigid": SweepResult, "matches": [...]}
    (engines not requested are omitted). ``keep_runs`` additionally returns
    the per-level indentation/pull objects for reporting.
    """
    levels = int(levels or scene.sweep.levels)
    mesh = scene.build_mesh() if "fem" in engines else None
    materials = scene.material_table()
    primitive = scene.build_primitive()
    mu = scene.contact.mu
    if mu is None:
        mu = scene.materials[scene.object_material].friction

    out = {}
    runs = []
    fem_rows = []
    if "fem" in engines:
        depths = scene.closure_depths()
        if len(depths) != levels:
            raise ConfigurationError(
                "sweep.closure_depths: %d depths for %d levels"
                % (len(depths), levels))
        if workers > 1 and not keep_runs:
            from concurrent.futures import ProcessPoolExecutor
            payloads = [(scene, i, float(d), slip_threshold)
                        for i, d in enumerate(depths, start=1)]
            with ProcessPoolExecutor(max_workers=workers) as pool:
                for row in pool.map(_sweep_level_task, payloads):
                    fem_rows.append(row)
                    if progress is not None:
                        progress("fem", row.level, levels, row)
        else:
            for i, depth in enumerate(depths, start=1):
                try:
                    row, indent, pull = _fem_level(scene, mesh, materials, i,
                                                   depth, primitive,
                                                   slip_threshold)
                except ConvergenceError as exc:
                    exc.engine = "fem"
                    exc.level = i
                    raise
                fem_rows.append(row)
                if keep_runs:
                    runs.append((indent, pull))
                if progress is not None:
                    progress("fem", i, levels, row)
        out["fem"] = SweepResult(engine="fem", rows=fem_rows)

    if "rigid" in engines:
        if scene.sweep.actuation_forces is not None:
            acts = np.asarray(scene.sweep.actuation_forces, dtype=float)
            if len(acts) != levels:
                raise ConfigurationError(
                    "sweep.actuation_forces: %d forces for %d levels"
                    % (len(acts), levels))
        elif fem_rows:
            q_touch = closure_for_depth(scene.gripper, primitive, 0.0)
            base_contacts = find_contact_points(scene.gripper, q_touch,
                                                primitive)
            pattern = _squeeze_distribution(base_contacts)
            thumb_share = sum(
                s for s, c in zip(pattern, base_contacts)
                if c.link == scene.thumb_link)
            if thumb_share <= 0.0:
                raise ConfigurationError(
                    "thumb link carries no squeeze in the contact pattern")
            raw = np.array([r.thumb_fn for r in fem_rows]) / thumb_share
            acts = np.maximum.accumulate(raw)
        else:
            acts = np.linspace(0.0, 40.0, levels)
        states = close_gripper(scene.gripper, primitive, acts, mu,
                               gravity=scene.gravity,
                               thumb_link=scene.thumb_link)
        rigid_rows = []
        for s in states:
            bound = rigid_pull_test(s, scene.sweep.pull_direction, mu,
                                    obj_mass=primitive.mass,
                                    gravity=scene.gravity)
            rigid_rows.append(SweepRow(
                engine="rigid", level=s.level,
                thumb_fn=float(s.thumb_normal_force),
                total_fn=float(s.total_normal_force),
                lateral=float(bound), slipped=True, onset=0.0))
            if progress is not None:
                progress("rigid", s.level, levels, rigid_rows[-1])
        out["rigid"] = SweepResult(engine="rigid", rows=rigid_rows)

    if "fem" in out and "rigid" in out:
        matches = []
        for fr in out["fem"].rows:
            best = None
            for rr in out["rigid"].rows:
                ref = max(fr.thumb_fn, 1e-12)
                if abs(rr.thumb_fn - fr.thumb_fn) <= 0.10 * ref:
                    err = abs(rr.thumb_fn - fr.thumb_fn)
                    if best is None or err < best[0]:
                        best = (err, rr.level)
            if best is not None:
                fr.matched_level = best[1]
                matches.append((fr.level, best[1]))
        out["matches"] = matches
    if keep_runs:
        out["runs"] = runs
    return out


# ---------------------------------------------------------------------------
# exports

def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if x == 0.0:
        x = 0.0
    return "%.10e" % x


def write_sweep_csv(results, path):
    """Sweep dataset: engine, level, thumb_fn_N, total_fn_N, lateral_N,
    slipped, onset_m."""
    lines = ["engine,level,thumb_fn_N,total_fn_N,lateral_N,slipped,onset_m"]
    for engine in ("rigid", "fem"):
        if engine not in results:
            continue
        for r in results[engine].rows:
            lines.append(",".join([r.engine, str(r.level), _fmt(r.thumb_fn),
                                   _fmt(r.total_fn), _fmt(r.lateral),
                                   _fmt(r.slipped), _fmt(r.onset)]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_contact_history_csv(records_with_contacts, path):
    """Contact history rows: (time s, contact id, node id, link, gap m,
    fn N, ft N, slip flag)."""
    lines = ["time_s,contact_id,node_id,link,gap_m,fn_N,ft_N,slip"]
    for time, contacts, link_of_surface in records_with_contacts:
        for i, c in enumerate(contacts):
            link = link_of_surface.get(c.surface_id, "")
            lines.append(",".join([
                _fmt(time), str(i), str(c.node_id), link, _fmt(c.gap),
                _fmt(c.normal_force),
                _fmt(float(np.linalg.norm(c.tangential_force))),
                _fmt(bool(c.slipping))]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_skin_deformation_csv(mesh, state, path):
    """Boundary-node before/after coordinates: node, x0, y0, z0, x, y, z."""
    lines = ["node,x0,y0,z0,x,y,z"]
    for n in mesh.boundary_nodes():
        x0 = mesh.nodes[n]
        x = x0 + state.u[n]
        lines.append(",".join([str(int(n))] + [_fmt(v) for v in x0]
                              + [_fmt(v) for v in x]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
