"""Rigid grasp engine: gripper kinematics, point contacts, cone equilibrium.

The gripper is a kinematic tree of links with revolute/prismatic joints;
pads are triangulated surfaces in link frames. Objects on the rigid side
are primitives (sphere, cylinder); contact against a pad is a single point
with the object's outward normal, and penetration beyond a small tolerance
is an invalid rigid configuration.

Grasp statics: contact forces on the object must balance gravity and sum
zero moment about the center of mass (hard-finger point contacts, no
frictional moments), with each force inside its Coulomb friction cone of
half-angle atan(mu). Cones are linearized as 8-edge pyramids whose edges
lie exactly on the cone, so any admissible combination also satisfies the
exact cone. The first pyramid edge is aligned with the tangential
projection of the external load at each contact, which removes the
linearization bias exactly where the load must be carried. Feasibility is
decided by an L1 residual linear program (HiGHS), so results are
deterministic; the contract is the residual bound, not the algorithm.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .errors import ConfigurationError, RigidPenetrationError
from .transforms import Pose, rotation_about_axis

__all__ = [
    "Joint", "GripperLink", "Gripper", "RigidContact", "GraspState",
    "SphereObject", "CylinderObject", "forward_kinematics",
    "find_contact_points", "grasp_equilibrium", "close_gripper",
    "closure_for_depth", "rigid_pull_test", "in_friction_cone",
]

CONE_EDGES = 8
PENETRATION_LIMIT = 1e-4   # m, beyond this a rigid configuration is invalid
TOUCH_EPS = 1e-6           # m, detection slack for configurations at touch
RESIDUAL_TOL = 1e-6        # N and N*m, equilibrium feasibility bounds


@dataclass
class Joint:
    kind: str = "fixed"                 # fixed | revolute | prismatic
    axis: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    limits: tuple = (0.0, 0.0)

    def __post_init__(self):
        if self.kind not in ("fixed", "revolute", "prismatic"):
            raise ConfigurationError("unknown joint kind %r" % (self.kind,))
        self.axis = np.asarray(self.axis, dtype=float).reshape(3)
        n = np.linalg.norm(self.axis)
        if self.kind != "fixed":
            if n < 1e-12:
                raise ConfigurationError("joint axis must be nonzero")
            self.axis = self.axis / n

    def pose(self, value):
        if self.kind == "fixed":
            return Pose.identity()
        lo, hi = self.limits
        if not lo - 1e-12 <= value <= hi + 1e-12:
            raise ValueError("joint value %.6g outside limits [%g, %g]"
                             % (value, lo, hi))
        if self.kind == "revolute":
            return Pose(rotation_about_axis(self.axis, value), np.zeros(3))
        return Pose(np.eye(3), value * self.axis)


@dataclass
class GripperLink:
    name: str
    parent: str | None                  # None for the base link
    origin: Pose = field(default_factory=Pose.identity)
    joint: Joint = field(default_factory=Joint)
    pad: object = None                  # RigidSurface in the link frame


@dataclass(eq=False)
class Gripper:
    """Kinematic tree with a world base pose (p_h, R_h)."""

    links: list
    base_position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    base_rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    closure_rates: dict = field(default_factory=dict)  # joint link -> rate

    def __post_init__(self):
        self.base_position = np.asarray(self.base_position, dtype=float).reshape(3)
        self.base_rotation = np.asarray(self.base_rotation, dtype=float).reshape(3, 3)
        names = [l.name for l in self.links]
        if len(set(names)) != len(names):
            raise ConfigurationError("duplicate link names")
        self._index = {l.name: l for l in self.links}
        seen = set()
        for l in self.links:
            if l.parent is None:
                continue
            if l.parent not in self._index:
                raise ConfigurationError("link %r has unknown parent %r"
                                         % (l.name, l.parent))
            # walk to the root to reject cycles
            hops, cur = 0, l.parent
            while cur is not None:
                cur = self._index[cur].parent
                hops += 1
                if hops > len(self.links):
                    raise ConfigurationError("gripper links form a cycle")
            seen.add(l.name)

    @property
    def base_pose(self):
        return Pose(self.base_rotation, self.base_position)

    def joint_names(self):
        """Links with movable joints, in definition order (the q layout)."""
        return [l.name for l in self.links if l.joint.kind != "fixed"]

    def zero_q(self):
        return np.zeros(len(self.joint_names()))

    def link(self, name):
        return self._index[name]

    def fingers(self):
        """Movable subtrees hanging off the base link, keyed by their root."""
        base = next(l.name for l in self.links if l.parent is None)
        children = {}
        for l in self.links:
            if l.parent is not None:
                children.setdefault(l.parent, []).append(l.name)

        def subtree(root):
            out, stack = [], [root]
            while stack:
                cur = stack.pop()
                out.append(cur)
                stack.extend(children.get(cur, []))
            return out

        groups = {}
        for root in children.get(base, []):
            tree = subtree(root)
            movable = [n for n in tree if self._index[n].joint.kind != "fixed"]
            if movable:
                groups[root] = tree
        return groups

    def pad_links(self):
        return [l.name for l in self.links if l.pad is not None]


def forward_kinematics(gripper, q, base_pose=None):
    """World poses of every link for the joint vector ``q``.

    The base link pose equals the gripper base pose composed with the base
    link origin (identity origin leaves it at (p_h, R_h) exactly); pass
    ``base_pose`` to evaluate the chain at another base without mutating
    the gripper. Raises ValueError for out-of-limit joint values.
    """
    q = np.asarray(q, dtype=float).reshape(-1)
    names = gripper.joint_names()
    if len(q) != len(names):
        raise ValueError("expected %d joint values, got %d" % (len(names), len(q)))
    if base_pose is None:
        base_pose = gripper.base_pose
    qmap = dict(zip(names, q))
    poses = {}
    pending = list(gripper.links)
    while pending:
        progressed = False
        rest = []
        for link in pending:
            if link.parent is None:
                parent_pose = base_pose
            elif link.parent in poses:
                parent_pose = poses[link.parent]
            else:
                rest.append(link)
                continue
            joint_pose = link.joint.pose(qmap.get(link.name, 0.0))
            poses[link.name] = parent_pose.compose(link.origin).compose(joint_pose)
            progressed = True
        pending = rest
        if pending and not progressed:
            raise ConfigurationError("unresolvable link ordering")
    return poses


# ---------------------------------------------------------------------------
# rigid objects

@dataclass
class SphereObject:
    center: np.ndarray
    radius: float
    mass: float = 1.0

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float).reshape(3)
        if self.radius <= 0.0:
            raise ValueError("sphere radius must be positive")

    @property
    def com(self):
        return self.center

    def closest_to_surface(self, points):
        """(signed distance, object surface point, outward normal) per point.

        Signed distance is negative inside the sphere.
        """
        d = points - self.center
        dist = np.linalg.norm(d, axis=-1)
        safe = np.where(dist > 1e-15, dist, 1.0)
        normal = d / safe[..., None]
        surface = self.center + self.radius * normal
        return dist - self.radius, surface, normal


@dataclass
class CylinderObject:
    """Finite cylinder: axis from base point along a unit direction."""

    base: np.ndarray
    axis: np.ndarray
    length: float
    radius: float
    mass: float = 1.0

    def __post_init__(self):
        self.base = np.asarray(self.base, dtype=float).reshape(3)
        self.axis = np.asarray(self.axis, dtype=float).reshape(3)
        n = np.linalg.norm(self.axis)
        if n < 1e-12 or self.radius <= 0.0 or self.length <= 0.0:
            raise ValueError("degenerate cylinder")
        self.axis = self.axis / n

    @property
    def com(self):
        return self.base + 0.5 * self.length * self.axis

    def closest_to_surface(self, points):
        rel = points - self.base
        t = np.clip(rel @ self.axis, 0.0, self.length)
        on_axis = self.base + np.multiply.outer(t, self.axis)
        d = points - on_axis
        dist = np.linalg.norm(d, axis=-1)
        safe = np.where(dist > 1e-15, dist, 1.0)
        normal = d / safe[..., None]
        surface = on_axis + self.radius * normal
        return dist - self.radius, surface, normal


def _segment_segment_closest(p1, q1, p2, q2):
    """Closest points between segments [p1, q1] and [p2, q2]."""
    d1 = q1 - p1
    d2 = q2 - p2
    r = p1 - p2
    a = d1 @ d1
    e = d2 @ d2
    f = d2 @ r
    if a < 1e-30 and e < 1e-30:
        return p1, p2
    if a < 1e-30:
        t = np.clip(f / e, 0.0, 1.0)
        return p1, p2 + t * d2
    c = d1 @ r
    if e < 1e-30:
        s = np.clip(-c / a, 0.0, 1.0)
        return p1 + s * d1, p2
    b = d1 @ d2
    denom = a * e - b * b
    s = np.clip((b * f - c * e) / denom, 0.0, 1.0) if denom > 1e-30 else 0.0
    t = (b * s + f) / e
    if t < 0.0:
        t = 0.0
        s = np.clip(-c / a, 0.0, 1.0)
    elif t > 1.0:
        t = 1.0
        s = np.clip((b - c) / a, 0.0, 1.0)
    return p1 + s * d1, p2 + t * d2


def _closest_on_triangles_to_point(verts, tris, point):
    """Closest point on a triangulated surface to a point (min distance).

    Triangles are scanned in index order; strict improvement keeps the
    lowest index on ties (deterministic).
    """
    from .contact import _point_triangle_closest
    best_d = np.inf
    best_p = None
    q = point[None, :]
    for t in range(len(tris)):
        ia, ib, ic = tris[t]
        cp = _point_triangle_closest(q, verts[ia], verts[ib], verts[ic])[0]
        d = float(np.linalg.norm(point - cp))
        if d < best_d - 1e-15:
            best_d = d
            best_p = cp
    return best_d, best_p


def _closest_pair_surface_segment(verts, tris, a, b):
    """Closest (surface point, segment point) pair between a triangulated
    surface and the segment [a, b].

    Candidates per triangle: each segment endpoint against the triangle and
    each triangle edge against the segment; a common-normal interior pair
    only exists for a segment parallel to the face, where edge candidates
    tie at the same distance. Fixed scan order makes ties deterministic.
    """
    from .contact import _point_triangle_closest
    best = (np.inf, None, None)
    ends = np.vstack([a, b])
    for t in range(len(tris)):
        corners = verts[tris[t]]
        cps = _point_triangle_closest(ends, corners[0], corners[1], corners[2])
        for k in range(2):
            d = float(np.linalg.norm(ends[k] - cps[k]))
            if d < best[0] - 1e-15:
                best = (d, cps[k], ends[k])
        for k in range(3):
            e0, e1 = corners[k], corners[(k + 1) % 3]
            cs, ct = _segment_segment_closest(e0, e1, a, b)
            d = float(np.linalg.norm(cs - ct))
            if d < best[0] - 1e-15:
                best = (d, cs, ct)
    return best


def _pad_object_gap(pad, pose, obj):
    """(signed distance, object surface point, outward normal) for one pad.

    The signed distance is measured from the object's surface to the
    nearest point of the pad's triangulated surface (negative when the pad
    overlaps the object).
    """
    verts = pose.apply(pad.vertices)
    if isinstance(obj, SphereObject):
        d, pad_point = _closest_on_triangles_to_point(verts, pad.triangles,
                                                      obj.center)
        if d < 1e-12:
            raise RigidPenetrationError(depth=obj.radius, limit=PENETRATION_LIMIT)
        normal = (pad_point - obj.center) / d
        return d - obj.radius, obj.center + obj.radius * normal, normal
    if isinstance(obj, CylinderObject):
        a = obj.base
        b = obj.base + obj.length * obj.axis
        d, pad_point, axis_point = _closest_pair_surface_segment(
            verts, pad.triangles, a, b)
        if d < 1e-12:
            raise RigidPenetrationError(depth=obj.radius, limit=PENETRATION_LIMIT)
        normal = (pad_point - axis_point) / d
        return d - obj.radius, axis_point + obj.radius * normal, normal
    raise ConfigurationError("unsupported rigid object %r" % type(obj).__name__)


@dataclass
class RigidContact:
    """Point contact for grasp statics (hard finger: zero moment)."""

    position: np.ndarray          # world point on the object surface
    r: np.ndarray                 # moment arm from the object COM
    normal: np.ndarray            # object outward normal (unit)
    force: np.ndarray = field(default_factory=lambda: np.zeros(3))
    moment: np.ndarray = field(default_factory=lambda: np.zeros(3))
    link: str = ""
    gap: float = 0.0

    @property
    def pressing_direction(self):
        """Direction an admissible contact force pushes the object."""
        return -self.normal

    @property
    def normal_force(self):
        return float(self.force @ self.pressing_direction)


@dataclass
class GraspState:
    """One grip-tightness level of the rigid engine."""

    q: np.ndarray
    contacts: list
    actuation: float              # total commanded squeeze, N
    level: int = 0
    thumb_link: str = ""
    feasible: bool = False
    residual_force: float = np.inf
    residual_moment: float = np.inf

    @property
    def thumb_normal_force(self):
        return sum(c.normal_force for c in self.contacts
                   if c.link == self.thumb_link)

    @property
    def total_normal_force(self):
        return sum(c.normal_force for c in self.contacts)


def find_contact_points(gripper, q, obj, eps=TOUCH_EPS):
    """One point contact per touching (pad, object) pair, forces zeroed.

    A pad touches when its deepest vertex has signed distance <= eps; the
    contact sits at the object-surface point below that vertex with the
    object's outward normal. Penetration beyond PENETRATION_LIMIT raises
    RigidPenetrationError (rigid bodies must not overlap).
    """
    poses = forward_kinematics(gripper, q)
    contacts = []
    for name in gripper.pad_links():
        link = gripper.link(name)
        sd, surface, normal = _pad_object_gap(link.pad, poses[name], obj)
        if sd < -PENETRATION_LIMIT:
            raise RigidPenetrationError(depth=-sd, limit=PENETRATION_LIMIT)
        if sd <= eps:
            contacts.append(RigidContact(position=surface,
                                         r=surface - obj.com,
                                         normal=normal,
                                         link=name, gap=float(sd)))
    return contacts


# ---------------------------------------------------------------------------
# friction cones

def _tangent_basis(direction, preferred):
    """Orthonormal (t1, t2) normal to ``direction``; t1 follows ``preferred``.

    Aligning t1 with the tangential projection of the external load puts a
    pyramid edge where the load must be resisted, so the 8-edge
    linearization is exact for that direction.
    """
    d = direction / np.linalg.norm(direction)
    t1 = preferred - (preferred @ d) * d
    n = np.linalg.norm(t1)
    if n < 1e-12:
        ref = np.eye(3)[int(np.argmin(np.abs(d)))]
        t1 = ref - (ref @ d) * d
        n = np.linalg.norm(t1)
    t1 = t1 / n
    return t1, np.cross(d, t1)


def _cone_edges(contact, mu, preferred, k=CONE_EDGES):
    """Pyramid edge directions on the exact cone around the pressing axis."""
    d = contact.pressing_direction
    if mu == 0.0:
        return d[None, :]
    t1, t2 = _tangent_basis(d, preferred)
    theta = 2.0 * np.pi * np.arange(k) / k
    return (d[None, :]
            + mu * (np.cos(theta)[:, None] * t1 + np.sin(theta)[:, None] * t2))


def in_friction_cone(force, axis, mu, tol=1e-9):
    """Angle test: force within atan(mu) of the (pressing) axis."""
    f = np.asarray(force, dtype=float)
    nf = np.linalg.norm(f)
    if nf < 1e-15:
        return True
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    cosang = np.clip(f @ axis / nf, -1.0, 1.0)
    return np.arccos(cosang) <= np.arctan(mu) + tol


def _wrench_system(contacts, mu, preferred):
    """Edge directions, force map (3 x vars) and moment map (3 x vars)."""
    edges = [_cone_edges(c, mu, preferred) for c in contacts]
    cols_f = np.hstack([e.T for e in edges])
    cols_m = np.hstack([np.cross(c.r, e).T for c, e in zip(contacts, edges)])
    return edges, cols_f, cols_m


def _assign_forces(contacts, edges, a):
    k = 0
    for c, e in zip(contacts, edges):
        n = len(e)
        c.force = a[k:k + n] @ e
        c.moment = np.zeros(3)
        k += n


def grasp_equilibrium(contacts, mu, mass, gravity=(0.0, 0.0, -9.81),
                      squeeze=None, extra_force=None):
    """Static grasp feasibility with linearized friction cones.

    Solves for contact forces (on the object) balancing gravity plus an
    optional extra external force at the COM, with zero net moment about
    the COM. ``squeeze``: optional per-contact normal-force magnitudes; if
    given, the normal components are pinned and only the friction
    distribution is free. Without it, the solver additionally minimizes
    the total normal force (the loosest grasp that holds, used for the
    actuation-zero equilibrium boundary).

    Returns a dict with keys feasible, forces (N x 3), residual_force (N),
    residual_moment (N*m). Infeasible cases return the minimal-residual
    certificate, not an error.
    """
    if mu < 0.0:
        raise ValueError("friction coefficient must be >= 0")
    gravity = np.asarray(gravity, dtype=float).reshape(3)
    load = mass * gravity
    if extra_force is not None:
        load = load + np.asarray(extra_force, dtype=float).reshape(3)

    if not contacts:
        return {"feasible": bool(np.linalg.norm(load) < RESIDUAL_TOL),
                "forces": np.zeros((0, 3)),
                "residual_force": float(np.linalg.norm(load)),
                "residual_moment": 0.0}

    edges, cols_f, cols_m = _wrench_system(contacts, mu, -load if
                                           np.linalg.norm(load) > 0 else
                                           np.array([1.0, 0.0, 0.0]))
    nvar = cols_f.shape[1]
    scale = max(max(np.linalg.norm(c.r) for c in contacts), 1e-9)
    A = np.vstack([cols_f, cols_m / scale])
    b = np.concatenate([-load, np.zeros(3)])

    A_eq = None
    b_eq = None
    if squeeze is not None:
        squeeze = np.broadcast_to(np.asarray(squeeze, dtype=float),
                                  (len(contacts),))
        A_eq = np.zeros((len(contacts), nvar + 6))
        k = 0
        for i, e in enumerate(edges):
            A_eq[i, k:k + len(e)] = 1.0
            k += len(e)
        b_eq = squeeze

    # stage 1, L1 feasibility: minimize the wrench residual slack sum
    c_vec = np.concatenate([np.zeros(nvar), np.ones(6)])
    A_ub = np.block([[A, -np.eye(6)], [-A, -np.eye(6)]])
    b_ub = np.concatenate([b, -b])
    res = linprog(c_vec, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                  bounds=[(0, None)] * (nvar + 6), method="highs")
    if not res.success:
        return {"feasible": False, "forces": np.zeros((len(contacts), 3)),
                "residual_force": float(np.linalg.norm(load)),
                "residual_moment": np.inf}
    a = res.x[:nvar]

    if squeeze is None and res.fun < RESIDUAL_TOL:
        # stage 2: among exact equilibria, the loosest grasp (minimal total
        # normal force = sum of the cone coordinates)
        res2 = linprog(np.ones(nvar), A_eq=A, b_eq=b,
                       bounds=[(0, None)] * nvar, method="highs")
        if res2.success:
            a = res2.x
    _assign_forces(contacts, edges, a)
    total_f = sum(c.force for c in contacts) + load
    total_m = sum(np.cross(c.r, c.force) for c in contacts)
    rf = float(np.linalg.norm(total_f))
    rm = float(np.linalg.norm(total_m))
    return {"feasible": rf < RESIDUAL_TOL and rm < RESIDUAL_TOL,
            "forces": np.array([c.force for c in contacts]),
            "residual_force": rf, "residual_moment": rm}


def _squeeze_distribution(contacts):
    """Normal-only internal force distribution, unit total squeeze.

    Least-squares fit of sum_i s_i d_i = 0 and sum_i s_i (r_i x d_i) = 0
    with s >= 0, sum s = 1: the pure pinch pattern actuation scales.
    """
    from scipy.optimize import nnls
    n = len(contacts)
    if n == 0:
        return np.zeros(0)
    D = np.array([c.pressing_direction for c in contacts]).T      # 3 x n
    M = np.array([np.cross(c.r, c.pressing_direction) for c in contacts]).T
    scale = max(max(np.linalg.norm(c.r) for c in contacts), 1e-9)
    A = np.vstack([D, M / scale, np.ones((1, n))])
    b = np.zeros(7)
    b[6] = 1.0
    s, _ = nnls(A, b)
    total = s.sum()
    if total <= 0.0:
        raise ConfigurationError("degenerate contact set: no squeeze pattern")
    return s / total


def closure_for_depth(gripper, obj, depth, s_max=1.0):
    """Joint vector whose pads reach ``depth`` into the undeformed object.

    Each finger's joints advance along the gripper closure rates until the
    finger's deepest pad vertex has signed distance -depth (depth 0 means
    touch). Raises ConfigurationError when a finger cannot reach.
    """
    from scipy.optimize import brentq
    names = gripper.joint_names()
    rates = np.array([gripper.closure_rates.get(n, 0.0) for n in names])
    q = gripper.zero_q()
    fingers = gripper.fingers()
    if not fingers:
        raise ConfigurationError("gripper has no movable fingers")
    for root, tree in fingers.items():
        sel = np.array([n in tree for n in names])
        if not sel.any():
            continue
        pads = [n for n in tree if gripper.link(n).pad is not None]
        if not pads:
            continue

        def gap(s):
            qf = q.copy()
            qf[sel] = s * rates[sel]
            poses = forward_kinematics(gripper, qf)
            best = np.inf
            for name in pads:
                sd, _, _ = _pad_object_gap(gripper.link(name).pad,
                                           poses[name], obj)
                best = min(best, sd)
            return best + depth

        lo, hi = 0.0, s_max
        if gap(lo) <= 0.0:
            s_star = lo
        elif gap(hi) > 0.0:
            raise ConfigurationError(
                "finger %r cannot reach the object (closure exhausted)" % root)
        else:
            s_star = brentq(gap, lo, hi, xtol=1e-15)
        q[sel] = s_star * rates[sel]
    return q


def close_gripper(gripper, obj, actuation_levels, mu,
                  gravity=(0.0, 0.0, -9.81), thumb_link="thumb_proximal"):
    """Grasp states over monotone actuation levels (the tightness ladder).

    Fingers close until touch (rigid bodies: the configuration is the same
    for every level; actuation only scales forces). Each level distributes
    its total squeeze over the contacts in the pinch pattern that balances
    the normal components, then solves the friction equilibrium for
    gravity. Actuation 0 instead solves for the loosest feasible grasp.
    """
    levels = np.asarray(actuation_levels, dtype=float)
    if np.any(np.diff(levels) < 0.0):
        raise ValueError("actuation levels must be monotone increasing")

    q = closure_for_depth(gripper, obj, depth=0.0)
    base_contacts = find_contact_points(gripper, q, obj)
    if not base_contacts:
        raise ConfigurationError("closure found no pad-object contact")
    pattern = _squeeze_distribution(base_contacts)

    states = []
    for lvl, act in enumerate(levels, start=1):
        contacts = find_contact_points(gripper, q, obj)
        if act == 0.0:
            sol = grasp_equilibrium(contacts, mu, obj.mass, gravity)
        else:
            sol = grasp_equilibrium(contacts, mu, obj.mass, gravity,
                                    squeeze=act * pattern)
        states.append(GraspState(q=q.copy(), contacts=contacts,
                                 actuation=float(act), level=lvl,
                                 thumb_link=thumb_link,
                                 feasible=sol["feasible"],
                                 residual_force=sol["residual_force"],
                                 residual_moment=sol["residual_moment"]))
    return states


def rigid_pull_test(grasp_state, pull_direction, mu, obj_mass=0.0,
                    gravity=(0.0, 0.0, 0.0)):
    """Coulomb bound: largest pull along ``pull_direction`` the grasp resists.

    Maximizes the pull magnitude subject to force/moment balance with the
    grasp state's normal forces pinned and every contact force inside its
    linearized cone (a pyramid edge is aligned with the pull, so pads whose
    normals are orthogonal to the pull resist exactly mu * sum |f_n|).
    """
    contacts = grasp_state.contacts
    if not contacts:
        return 0.0
    u = np.asarray(pull_direction, dtype=float).reshape(3)
    u = u / np.linalg.norm(u)
    gravity = np.asarray(gravity, dtype=float).reshape(3)
    load = obj_mass * gravity

    squeeze = np.array([c.normal_force for c in contacts])
    edges, cols_f, cols_m = _wrench_system(contacts, mu, preferred=-u)
    nvar = cols_f.shape[1]
    scale = max(max(np.linalg.norm(c.r) for c in contacts), 1e-9)

    # variables: [a (cone coords), p (pull magnitude)]
    A_eq = np.zeros((6 + len(contacts), nvar + 1))
    b_eq = np.zeros(6 + len(contacts))
    A_eq[:3, :nvar] = cols_f
    A_eq[:3, nvar] = u
    b_eq[:3] = -load
    A_eq[3:6, :nvar] = cols_m / scale
    k = 0
    for i, e in enumerate(edges):
        A_eq[6 + i, k:k + len(e)] = 1.0
        k += len(e)
    b_eq[6:] = squeeze

    c_vec = np.zeros(nvar + 1)
    c_vec[nvar] = -1.0
    res = linprog(c_vec, A_eq=A_eq, b_eq=b_eq,
                  bounds=[(0, None)] * nvar + [(0, None)], method="highs")
    if not res.success:
        return 0.0
    return float(res.x[nvar])
