#!/usr/bin/env python3
"""Regenerate the shipped scene JSON files from the preset builders.

The scene documents under src/softgrasp/scenes/ are full, explicit
configurations (every link, joint, pad, and material spelled out); this
script rebuilds them from softgrasp.presets so the shipped files and the
builders cannot drift apart (a test compares them).

Run from the repository root:  python3 demos/00_build_scenes.py
"""

import json
import os

from softgrasp.presets import PRESETS
from softgrasp.scene import scene_from_dict

HERE = os.path.dirname(os.path.abspath(__file__))
SCENES = os.path.join(HERE, "..", "src", "softgrasp", "scenes")

for name, build in PRESETS.items():
    doc = build()
    scene_from_dict(doc)    # refuse to ship an invalid document
    path = os.path.join(SCENES, name + ".json")
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
    print("wrote", os.path.relpath(path, os.path.join(HERE, "..")))
