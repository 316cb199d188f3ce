"""Frictional contact between deformable-mesh nodes and rigid surfaces.

Enforcement is a penalty regularization of the contact complementarity
conditions: the normal force is k_n * penetration along the nearest
triangle's outward normal, and the tangential force comes from an elastic
anchor that sticks until the Coulomb cap mu*|f_n| and then slides along
the cap (stick-slip). The multiplier-exactness of the underlying
non-penetration / non-negativity / complementarity conditions is not
imposed; :func:`kkt_residuals` reports how closely a state satisfies them.

Anchors are stored in the rigid surface's local frame, so a moving gripper
pad drags its stuck contacts with it; that is the mechanism that transmits
pulling forces into the deformable body.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .transforms import Pose

__all__ = ["ContactPoint", "KktReport", "PenaltyContact", "detect_contacts",
           "contact_forces", "kkt_residuals", "gripper_reaction"]

CONE_TOL = 1e-9  # N, slack on |f_t| <= mu |f_n| bookkeeping


@dataclass
class ContactPoint:
    """One node-to-rigid-surface contact candidate.

    ``gap`` is the signed distance of the node along ``normal`` (negative
    means penetration); ``force`` is the contact force exerted on the node
    (normal component along +normal is never negative). ``anchor`` tracks
    the stick reference point in world coordinates, ``anchor_local`` the
    same point in the surface frame.
    """

    node_id: int
    surface_id: int
    triangle_id: int
    normal: np.ndarray              # unit outward normal of the triangle
    gap: float                      # m
    closest: np.ndarray             # closest point on the surface, world
    force: np.ndarray = field(default_factory=lambda: np.zeros(3))
    anchor: np.ndarray = None       # world-frame stick anchor
    anchor_local: np.ndarray = None
    surface_velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    mu: float = 0.0
    slipping: bool = False

    @property
    def normal_force(self):
        return float(self.normal @ self.force)

    @property
    def tangential_force(self):
        return self.force - self.normal_force * self.normal


@dataclass
class KktReport:
    """Residuals of the contact complementarity conditions (diagnostic)."""

    max_penetration: float       # m
    min_normal_force: float      # N
    max_complementarity: float   # N*m/s, max |f_n * (normal gap rate)|
    cone_violations: int         # contacts with |f_t| > mu |f_n| + tol


def _point_triangle_closest(points, a, b, c):
    """Closest points on triangle (a, b, c) for an array of query points.

    Vectorized region classification (vertex / edge / face) following the
    standard closest-point construction on a triangle.
    """
    ab = b - a
    ac = c - a
    ap = points - a
    d1 = ap @ ab
    d2 = ap @ ac
    bp = points - b
    d3 = bp @ ab
    d4 = bp @ ac
    cp = points - c
    d5 = cp @ ab
    d6 = cp @ ac

    vc = d1 * d4 - d3 * d2
    vb = d5 * d2 - d1 * d6
    va = d3 * d6 - d5 * d4

    out = np.empty_like(points)
    done = np.zeros(len(points), dtype=bool)

    def assign(mask, value):
        take = mask & ~done
        if np.any(take):
            out[take] = value if value.ndim == 1 else value[take]
            done[take] = True

    assign((d1 <= 0) & (d2 <= 0), a)
    assign((d3 >= 0) & (d4 <= d3), b)
    assign((d6 >= 0) & (d5 <= d6), c)

    denom = np.where(d1 - d3 != 0.0, d1 - d3, 1.0)
    assign((vc <= 0) & (d1 >= 0) & (d3 <= 0),
           a + np.outer(d1 / denom, ab))
    denom = np.where(d2 - d6 != 0.0, d2 - d6, 1.0)
    assign((vb <= 0) & (d2 >= 0) & (d6 <= 0),
           a + np.outer(d2 / denom, ac))
    s = (d4 - d3) + (d5 - d6)
    denom = np.where(s != 0.0, s, 1.0)
    assign((va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0),
           b + np.outer((d4 - d3) / denom, c - b))

    if not np.all(done):
        total = np.where(va + vb + vc != 0.0, va + vb + vc, 1.0)
        v = vb / total
        w = vc / total
        face = a + np.outer(v, ab) + np.outer(w, ac)
        out[~done] = face[~done]
    return out


def detect_contacts(positions, surfaces, activation_tolerance=0.0,
                    candidate_ids=None):
    """Find node contacts against posed rigid surfaces.

    positions: (n, 3) current node coordinates.
    surfaces: sequence of (RigidSurface, Pose) pairs.
    candidate_ids: optional node-id subset to test (boundary nodes).

    Returns one :class:`ContactPoint` per node whose nearest surface lies
    within ``activation_tolerance`` (gap <= tolerance; touching counts).
    The nearest triangle wins by smallest distance, then lowest triangle
    index; the gap is the signed distance along that triangle's outward
    normal. Forces are zeroed.
    """
    positions = np.asarray(positions, dtype=float)
    if candidate_ids is None:
        candidate_ids = np.arange(len(positions))
    else:
        candidate_ids = np.asarray(candidate_ids, dtype=np.int64)
    pts = positions[candidate_ids]

    best_dist = np.full(len(pts), np.inf)
    best_gap = np.full(len(pts), np.inf)
    best_surface = np.full(len(pts), -1, dtype=np.int64)
    best_triangle = np.full(len(pts), -1, dtype=np.int64)
    best_normal = np.zeros((len(pts), 3))
    best_closest = np.zeros((len(pts), 3))

    for sid, (surface, pose) in enumerate(surfaces):
        verts = pose.apply(surface.vertices)
        normals = pose.apply_vector(surface.normals)

        # AABB prefilter, inflated by the activation tolerance plus a
        # penetration allowance so nodes sunk below an open surface (e.g. a
        # plane patch) still register; deeper tunneling than a quarter of
        # the surface diagonal is outside the penalty model anyway.
        diag = float(np.linalg.norm(verts.max(axis=0) - verts.min(axis=0)))
        margin = max(activation_tolerance, 0.0) + 0.25 * diag + 1e-12
        lo = verts.min(axis=0) - margin
        hi = verts.max(axis=0) + margin
        near = np.flatnonzero(np.all((pts >= lo) & (pts <= hi), axis=1))
        if len(near) == 0:
            continue
        sub = pts[near]

        s_dist = np.full(len(sub), np.inf)
        s_tri = np.full(len(sub), -1, dtype=np.int64)
        s_closest = np.zeros((len(sub), 3))
        for t in range(surface.n_triangles):
            ia, ib, ic = surface.triangles[t]
            closest = _point_triangle_closest(sub, verts[ia], verts[ib], verts[ic])
            dist = np.linalg.norm(sub - closest, axis=1)
            better = dist < s_dist - 1e-15
            if np.any(better):
                s_dist[better] = dist[better]
                s_tri[better] = t
                s_closest[better] = closest[better]

        gap = np.einsum('ij,ij->i', sub - s_closest, normals[s_tri])
        better = s_dist < best_dist[near] - 1e-15
        idx = near[better]
        best_dist[idx] = s_dist[better]
        best_gap[idx] = gap[better]
        best_surface[idx] = sid
        best_triangle[idx] = s_tri[better]
        best_normal[idx] = normals[s_tri[better]]
        best_closest[idx] = s_closest[better]

    contacts = []
    for k in np.flatnonzero((best_surface >= 0)
                            & (best_gap <= activation_tolerance)):
        contacts.append(ContactPoint(
            node_id=int(candidate_ids[k]),
            surface_id=int(best_surface[k]),
            triangle_id=int(best_triangle[k]),
            normal=best_normal[k].copy(),
            gap=float(best_gap[k]),
            closest=best_closest[k].copy()))
    return contacts


def contact_forces(contacts, positions, k_n, k_t, mu, dt=None):
    """Penalty normal forces plus stick-slip tangential anchor forces.

    positions: (n, 3) current node coordinates (anchors must already be in
    world coordinates on the contacts; see :class:`PenaltyContact` for the
    moving-surface bookkeeping). Mutates and returns the contacts:
    ``force`` = f_n + f_t with f_n = k_n * max(0, -gap) * normal and the
    tangential trial force -k_t * (tangential offset from the anchor),
    capped at mu |f_n|; on cap the anchor slides so the elastic offset
    matches the cap exactly.
    """
    if k_n <= 0.0 or k_t <= 0.0:
        raise ValueError("penalty stiffnesses must be positive")
    if mu < 0.0:
        raise ValueError("friction coefficient must be >= 0")
    for c in contacts:
        n = c.normal
        p = positions[c.node_id]
        if c.anchor is None:
            c.anchor = p.copy()
        fn_mag = k_n * max(0.0, -c.gap)
        offset = p - c.anchor
        offset_t = offset - (offset @ n) * n
        trial = -k_t * offset_t
        cap = mu * fn_mag
        norm_trial = np.linalg.norm(trial)
        if norm_trial > cap:
            f_t = trial * (cap / norm_trial) if norm_trial > 0.0 else trial * 0.0
            c.slipping = True
            # slide the anchor so the elastic stretch sits exactly at the cap
            c.anchor = p + f_t / k_t
        else:
            f_t = trial
            c.slipping = False
        c.mu = mu
        c.force = fn_mag * n + f_t
    return contacts


def kkt_residuals(contacts, velocities):
    """Contact-condition residuals for the current contact set.

    velocities: (n, 3) nodal velocities; gap rates subtract the surface
    point velocity stored on each contact. With no active contacts all
    residuals are zero.
    """
    if not contacts:
        return KktReport(0.0, 0.0, 0.0, 0)
    max_pen = 0.0
    min_fn = np.inf
    max_comp = 0.0
    violations = 0
    for c in contacts:
        fn = c.normal_force
        max_pen = max(max_pen, -c.gap)
        min_fn = min(min_fn, fn)
        gap_rate = float(c.normal @ (velocities[c.node_id] - c.surface_velocity))
        max_comp = max(max_comp, abs(fn * gap_rate))
        ft = np.linalg.norm(c.tangential_force)
        if ft > c.mu * abs(fn) + CONE_TOL:
            violations += 1
    return KktReport(max_penetration=float(max(max_pen, 0.0)),
                     min_normal_force=float(min_fn),
                     max_complementarity=float(max_comp),
                     cone_violations=violations)


def gripper_reaction(contacts, link_assignment):
    """Aggregate contact reactions per rigid link.

    link_assignment: mapping surface_id -> link name. Returns
    {link: {"normal_sum": sum of |f_n| magnitudes,
            "tangential_sum": vector sum of tangential parts}}.
    Every link in the assignment gets an entry (zeros without contacts).
    """
    out = {name: {"normal_sum": 0.0, "tangential_sum": np.zeros(3)}
           for name in set(link_assignment.values())}
    for c in contacts:
        link = link_assignment.get(c.surface_id)
        if link is None:
            raise ConfigurationError("contact surface %d is not assigned to a link"
                                     % c.surface_id)
        out[link]["normal_sum"] += abs(c.normal_force)
        out[link]["tangential_sum"] = (out[link]["tangential_sum"]
                                       + c.tangential_force)
    return out


class PenaltyContact:
    """Stateful contact tracker for a set of rigid surfaces.

    Owns the per-(surface, node) stick anchors in surface-local frames and
    the surface poses, so pads may move between steps and stuck contacts
    ride along. ``forces`` returns the assembled constraint-side vector for
    :func:`softgrasp.fem.step_explicit` (subtracting it pushes penetrating
    nodes outward) plus the live contact list.
    """

    def __init__(self, surfaces, k_n, k_t, mu, activation_tolerance=0.0,
                 candidate_ids=None, link_of_surface=None):
        self.surfaces = [s if isinstance(s, tuple) else (s, Pose.identity())
                         for s in surfaces]
        self.poses = [pose for _, pose in self.surfaces]
        self.surfaces = [surf for surf, _ in self.surfaces]
        self.k_n = float(k_n)
        self.k_t = float(k_t)
        self.mu = float(mu)
        self.activation_tolerance = float(activation_tolerance)
        self.candidate_ids = candidate_ids
        self.link_of_surface = link_of_surface or {}
        self._anchors = {}           # (surface_id, node_id) -> local anchor
        self._prev_poses = list(self.poses)

    def set_poses(self, poses):
        self._prev_poses = list(self.poses)
        self.poses = list(poses)

    def stable_timestep(self, mass, safety=0.9):
        """Timestep bound from the penalty springs: safety*sqrt(m_min/k)."""
        k = max(self.k_n, self.k_t)
        return float(safety * np.sqrt(float(np.min(mass)) / k))

    def forces(self, positions, velocities, dt):
        surfaces = list(zip(self.surfaces, self.poses))
        contacts = detect_contacts(positions, surfaces,
                                   self.activation_tolerance,
                                   self.candidate_ids)
        # restore anchors (local -> world with the current pose)
        for c in contacts:
            key = (c.surface_id, c.node_id)
            pose = self.poses[c.surface_id]
            prev = self._prev_poses[c.surface_id]
            local = self._anchors.get(key)
            if local is not None:
                c.anchor_local = local
                c.anchor = pose.apply(local)
            if dt > 0.0:
                x_local = pose.pull_back(positions[c.node_id])
                c.surface_velocity = (pose.apply(x_local)
                                      - prev.apply(x_local)) / dt

        contact_forces(contacts, positions, self.k_n, self.k_t, self.mu, dt)

        # persist anchors for the surviving contacts only
        self._anchors = {}
        for c in contacts:
            pose = self.poses[c.surface_id]
            c.anchor_local = pose.pull_back(c.anchor)
            self._anchors[(c.surface_id, c.node_id)] = c.anchor_local

        f = np.zeros_like(positions)
        for c in contacts:
            f[c.node_id] -= c.force
        return f, contacts

    def reset_anchors(self):
        self._anchors = {}
