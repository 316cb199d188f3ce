"""Shipped scene documents.

Three reference scenes, exported as plain JSON dicts (the files under
``softgrasp/scenes/`` are generated from these and shipped with the
package):

* ``cylinder_pull``: the 13-level grasp-and-pull comparison on the arm
  phantom (about 3200 elements; a full two-engine sweep takes tens of
  minutes).
* ``cylinder_pull_small``: a two-level miniature of the same protocol on a
  coarse mesh, for smoke tests and determinism checks.
* ``sphere_squeeze``: the three-finger squeeze of the rubber-ball phantom
  used for strain-field reporting.
"""

from __future__ import annotations

import numpy as np

from .hands import three_finger_cylinder_hand, three_finger_sphere_hand
from .scene import gripper_to_dict

RUBBER = {
    "density": 1000.0,
    "model": "neo-hookean",
    "young_modulus": 3.0e4,
    "poisson_ratio": 0.3,
    "friction": 0.4,
    "rayleigh_mass_damping": 40.0,
}


def cylinder_pull_scene():
    hand = three_finger_cylinder_hand(0.05, grasp_center=(0.0, 0.0, 0.15))
    depths = np.linspace(0.002, 0.012, 13)
    return {
        "object": {
            "kind": "cylinder",
            "dimensions": {"radius": 0.05, "length": 0.30},
            "resolution": {"radial": 4, "axial": 40},
            "material": "phantom_rubber",
            "restraint": "far_end",
        },
        "materials": {"phantom_rubber": dict(RUBBER)},
        "gravity": [0.0, 0.0, 0.0],
        "gripper": gripper_to_dict(hand, "thumb_proximal"),
        "contact": {"activation_tolerance": 0.0},
        "sim": {"safety": 0.9, "output_interval": 0.01, "max_time": 8.0},
        "sweep": {
            "levels": 13,
            "closure_depths": [round(d, 10) for d in depths],
            "pull": {"direction": [0.0, 0.0, 1.0], "distance": 0.02},
        },
    }


def cylinder_pull_small_scene():
    hand = three_finger_cylinder_hand(0.05, grasp_center=(0.0, 0.0, 0.15))
    return {
        "object": {
            "kind": "cylinder",
            "dimensions": {"radius": 0.05, "length": 0.30},
            "resolution": {"radial": 2, "axial": 10},
            "material": "phantom_rubber",
            "restraint": "far_end",
        },
        "materials": {"phantom_rubber": dict(RUBBER)},
        "gravity": [0.0, 0.0, 0.0],
        "gripper": gripper_to_dict(hand, "thumb_proximal"),
        "contact": {"activation_tolerance": 0.0},
        "sim": {"safety": 0.9, "output_interval": 0.01, "max_time": 8.0},
        "sweep": {
            "levels": 2,
            "closure_depths": [0.004, 0.009],
            "pull": {"direction": [0.0, 0.0, 1.0], "distance": 0.01,
                     "duration": 0.6},
        },
    }


def sphere_squeeze_scene():
    hand = three_finger_sphere_hand(0.05)
    return {
        "object": {
            "kind": "sphere",
            "dimensions": {"radius": 0.05},
            "resolution": {"resolution": 6},
            "material": "phantom_rubber",
            "restraint": "center",
        },
        "materials": {"phantom_rubber": dict(RUBBER)},
        "gravity": [0.0, 0.0, 0.0],
        "gripper": gripper_to_dict(hand, "thumb_proximal"),
        "contact": {"activation_tolerance": 0.0},
        "sim": {"safety": 0.9, "output_interval": 0.01, "max_time": 8.0},
        "sweep": {
            "levels": 1,
            "closure_depths": [0.005],
            "pull": {"direction": [0.0, 0.0, 1.0], "distance": 0.0},
        },
    }


PRESETS = {
    "cylinder_pull": cylinder_pull_scene,
    "cylinder_pull_small": cylinder_pull_small_scene,
    "sphere_squeeze": sphere_squeeze_scene,
}
