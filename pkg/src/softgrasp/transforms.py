"""Rigid-body poses: rotation matrix + translation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def rotation_about_axis(axis, angle):
    """Rodrigues rotation matrix for a unit axis and angle in radians."""
    axis = np.asarray(axis, dtype=float)
    n = np.linalg.norm(axis)
    if n < 1e-12:
        raise ValueError("rotation axis must be nonzero")
    k = axis / n
    K = np.array([[0.0, -k[2], k[1]],
                  [k[2], 0.0, -k[0]],
                  [-k[1], k[0], 0.0]])
    return np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K)


@dataclass(eq=False)
class Pose:
    """World pose of a rigid frame: x_world = R @ x_local + p."""

    R: np.ndarray = field(default_factory=lambda: np.eye(3))
    p: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.R = np.asarray(self.R, dtype=float).reshape(3, 3)
        self.p = np.asarray(self.p, dtype=float).reshape(3)

    @staticmethod
    def identity():
        return Pose()

    def compose(self, other):
        """Pose of `other` expressed through self: self then other-in-self."""
        return Pose(self.R @ other.R, self.R @ other.p + self.p)

    def inverse(self):
        Rt = self.R.T
        return Pose(Rt, -Rt @ self.p)

    def apply(self, points):
        """Map local points (..., 3) into the world frame."""
        return np.asarray(points, dtype=float) @ self.R.T + self.p

    def apply_vector(self, vectors):
        """Rotate local vectors (..., 3) into the world frame."""
        return np.asarray(vectors, dtype=float) @ self.R.T

    def pull_back(self, points):
        """Map world points into the local frame."""
        return (np.asarray(points, dtype=float) - self.p) @ self.R

    def orthonormality_error(self):
        return float(np.abs(self.R.T @ self.R - np.eye(3)).max())
