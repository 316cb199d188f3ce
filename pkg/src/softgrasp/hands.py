"""Builders for the default three-finger hands.

The hands are ordinary :class:`softgrasp.rigid.Gripper` instances (scene
configs may define any other layout); these builders produce the two
reference arrangements used by the shipped scenes:

* cylinder hand: two fingers press from one side of a z-axis cylinder at
  axial offsets +/- spacing, the thumb opposes them from the other side.
  All joint axes are parallel to the cylinder axis, so pad face normals
  stay orthogonal to an axial pull at every closure angle.
* sphere hand: three identical fingers at 120 degree azimuths press
  radially inward in the equatorial plane.

Each finger has proximal and distal revolute links. The proximal pivot
sits a long lever away from the pad, so closure is a shallow arc that is
nearly a radial translation; the proximal pad carries the main contact
(the thumb proximal link is the grip-tightness metric).
"""

from __future__ import annotations

import numpy as np

from .mesh import RigidSurface
from .rigid import Gripper, GripperLink, Joint
from .transforms import Pose, rotation_about_axis

__all__ = ["three_finger_cylinder_hand", "three_finger_sphere_hand"]


def _finger_links(name, pivot_pose, lever, pad_len, pad_thick, pad_width,
                  joint_limit=1.5, distal_lever=0.016, distal_scale=0.75):
    """Two-link finger in a local frame that presses along +y.

    The pad's pressing face lies in the local y = 0 plane (outward normal
    +y, box body below); the pivot is the local origin, ``lever`` away
    from the pad center along +x.
    """
    prox_pad = RigidSurface.box(
        (0.5 * pad_len, 0.5 * pad_thick, 0.5 * pad_width),
        center=(lever, -0.5 * pad_thick, 0.0))
    dist_pad = RigidSurface.box(
        (0.5 * distal_scale * pad_len, 0.5 * pad_thick,
         0.5 * distal_scale * pad_width),
        center=(distal_lever, -0.5 * pad_thick, 0.0))
    proximal = GripperLink(
        name=name + "_proximal", parent="palm", origin=pivot_pose,
        joint=Joint("revolute", axis=(0.0, 0.0, 1.0), limits=(0.0, joint_limit)),
        pad=prox_pad)
    distal = GripperLink(
        name=name + "_distal", parent=name + "_proximal",
        origin=Pose(np.eye(3), (lever + 0.6 * pad_len, 0.0, 0.0)),
        joint=Joint("revolute", axis=(0.0, 0.0, 1.0), limits=(0.0, joint_limit)),
        pad=dist_pad)
    return [proximal, distal]


def _finger_base_pose(center, azimuth, reach, lever, z_off=0.0):
    """Pivot pose for a finger pressing radially inward from ``azimuth``.

    The template at azimuth -pi/2 (below the object, pressing +y) has base
    rotation R_y(pi): local +x runs from the pivot back toward the object
    centerline and the local joint axis z maps to world -z, which makes a
    positive joint angle close the finger. Other azimuths rotate that
    template about z.
    """
    spin = rotation_about_axis((0.0, 0.0, 1.0), azimuth + np.pi / 2)
    base = spin @ rotation_about_axis((0.0, 1.0, 0.0), np.pi)
    pivot = np.asarray(center, dtype=float) \
        + spin @ np.array([lever, -reach, z_off])
    return Pose(base, pivot)


def three_finger_cylinder_hand(object_radius, grasp_center=(0.0, 0.0, 0.15),
                               standoff=0.012, finger_spacing=0.032,
                               lever=0.12, pad_len=0.024, pad_thick=0.008,
                               pad_width=0.030, depth_budget=0.022,
                               distal_rate=0.35):
    """Hand wrapping a z-axis cylinder: fingers from -y, thumb from +y."""
    grasp_center = np.asarray(grasp_center, dtype=float)
    reach = object_radius + standoff
    links = [GripperLink(name="palm", parent=None)]
    links += _finger_links(
        "finger_a", _finger_base_pose(grasp_center, -np.pi / 2, reach, lever,
                                      z_off=-finger_spacing),
        lever, pad_len, pad_thick, pad_width)
    links += _finger_links(
        "finger_b", _finger_base_pose(grasp_center, -np.pi / 2, reach, lever,
                                      z_off=+finger_spacing),
        lever, pad_len, pad_thick, pad_width)
    links += _finger_links(
        "thumb", _finger_base_pose(grasp_center, +np.pi / 2, reach, lever),
        lever, pad_len, pad_thick, pad_width)

    rate = (standoff + depth_budget) / lever
    closure = {}
    for f in ("finger_a", "finger_b", "thumb"):
        closure[f + "_proximal"] = rate
        closure[f + "_distal"] = distal_rate * rate
    return Gripper(links=links, closure_rates=closure)


def three_finger_sphere_hand(object_radius, center=(0.0, 0.0, 0.0),
                             standoff=0.012, lever=0.12, pad_len=0.030,
                             pad_thick=0.008, pad_width=0.030,
                             depth_budget=0.015, distal_rate=0.35):
    """Three fingers at 120 degree azimuths squeezing a sphere radially."""
    names = ["thumb", "finger_a", "finger_b"]
    azimuths = [np.pi / 2, np.pi / 2 + 2 * np.pi / 3, np.pi / 2 + 4 * np.pi / 3]
    reach = object_radius + standoff
    links = [GripperLink(name="palm", parent=None)]
    for name, phi in zip(names, azimuths):
        links += _finger_links(
            name, _finger_base_pose(center, phi, reach, lever),
            lever, pad_len, pad_thick, pad_width)

    rate = (standoff + depth_budget) / lever
    closure = {}
    for f in names:
        closure[f + "_proximal"] = rate
        closure[f + "_distal"] = distal_rate * rate
    return Gripper(links=links, closure_rates=closure)
