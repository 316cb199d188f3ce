"""Scene configuration: one JSON document describing a full experiment.

A scene bundles the deformable phantom (kind, dimensions, resolution,
material), the named material table, the gripper definition (links,
joints, pads, base pose, closure rates), contact parameters, integrator
settings, and the grasp-and-pull sweep protocol. Unknown keys anywhere in
the document are hard errors so typos in numeric configs cannot pass
silently; all error messages name the offending field path.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import hexahedron as hexa
from .errors import ConfigurationError
from .fem import Material
from .mesh import (RigidSurface, generate_box_mesh, generate_cylinder_mesh,
                   generate_sphere_mesh)
from .rigid import CylinderObject, Gripper, GripperLink, Joint, SphereObject
from .transforms import Pose

__all__ = ["SceneConfig", "load_scene", "scene_from_dict", "builtin_scene_path"]


def _require(cond, path, message):
    if not cond:
        raise ConfigurationError("%s: %s" % (path, message))


def _check_keys(doc, allowed, path):
    unknown = set(doc) - set(allowed)
    if unknown:
        raise ConfigurationError("%s: unknown key(s) %s"
                                 % (path, sorted(unknown)))


def _get(doc, key, path, default=None, required=False):
    if key not in doc:
        if required:
            raise ConfigurationError("%s.%s: missing required field"
                                     % (path, key))
        return default
    return doc[key]


@dataclass
class SweepSettings:
    levels: int = 13
    closure_depths: list | None = None       # m beyond touch, one per level
    actuation_forces: list | None = None     # N, rigid engine override
    pull_direction: np.ndarray = field(
        default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    pull_distance: float = 0.02
    pull_duration: float | None = None       # None: adaptive (quasi-static)
    closure_duration: float = 0.4
    hold_duration: float = 0.1


@dataclass
class ContactSettings:
    k_n: float | None = None                 # None: 10 * softest E * char len
    k_t: float | None = None                 # None: equal to k_n
    mu: float | None = None                  # None: object material friction
    activation_tolerance: float = 0.0


@dataclass
class SimSettings:
    safety: float = 0.9
    damping: float | None = None             # c_m override for all materials
    output_interval: float = 0.01
    max_time: float = 8.0


@dataclass(eq=False)
class SceneConfig:
    object_kind: str
    object_dimensions: dict
    object_resolution: dict
    object_material: str
    restraint: str                           # far_end | center | none
    materials: dict                          # name -> Material
    gravity: np.ndarray
    gripper: Gripper
    thumb_link: str
    contact: ContactSettings
    sim: SimSettings
    sweep: SweepSettings

    def material_table(self):
        """Mesh material-id map: the phantom is material id 0."""
        mat = self.materials[self.object_material]
        if self.sim.damping is not None:
            mat = Material(density=mat.density, model=mat.model,
                           young_modulus=mat.young_modulus,
                           poisson_ratio=mat.poisson_ratio,
                           friction=mat.friction,
                           rayleigh_mass_damping=self.sim.damping)
        return {0: mat}

    def build_mesh(self):
        d, r = self.object_dimensions, self.object_resolution
        if self.object_kind == "box":
            return generate_box_mesh(
                (d["x"], d["y"], d["z"]),
                (r["x"], r["y"], r["z"]), material_id=0)
        if self.object_kind == "cylinder":
            return generate_cylinder_mesh(
                d["radius"], d["length"], r["radial"], r["axial"],
                material_id=0)
        if self.object_kind == "sphere":
            mesh = generate_sphere_mesh(d["radius"], r["resolution"],
                                        material_id=0)
            center = np.asarray(d.get("center", (0.0, 0.0, 0.0)), dtype=float)
            if np.any(center != 0.0):
                mesh.nodes += center
            return mesh
        raise ConfigurationError("object.kind: unsupported kind %r"
                                 % self.object_kind)

    def build_primitive(self):
        """Rigid-engine twin of the phantom (mass from density * volume)."""
        d = self.object_dimensions
        rho = self.materials[self.object_material].density
        if self.object_kind == "sphere":
            center = np.asarray(d.get("center", (0.0, 0.0, 0.0)), dtype=float)
            mass = rho * 4.0 / 3.0 * np.pi * d["radius"] ** 3
            return SphereObject(center=center, radius=d["radius"], mass=mass)
        if self.object_kind == "cylinder":
            mass = rho * np.pi * d["radius"] ** 2 * d["length"]
            return CylinderObject(base=(0.0, 0.0, 0.0), axis=(0.0, 0.0, 1.0),
                                  length=d["length"], radius=d["radius"],
                                  mass=mass)
        raise ConfigurationError(
            "object.kind: rigid engine needs sphere or cylinder, got %r"
            % self.object_kind)

    def restraint_constraints(self, mesh):
        from .fem import Constraint
        if self.restraint == "none":
            return []
        if self.restraint == "far_end":
            zmin = mesh.nodes[:, 2].min()
            nodes = np.flatnonzero(np.isclose(mesh.nodes[:, 2], zmin))
            return [Constraint(nodes, (0.0, 0.0, 0.0))]
        if self.restraint == "center":
            center = mesh.nodes.mean(axis=0)
            scale = np.abs(mesh.nodes - center).max()
            d = np.linalg.norm(mesh.nodes - center, axis=1)
            nodes = np.flatnonzero(d <= 0.25 * scale)
            if len(nodes) == 0:
                nodes = np.array([int(np.argmin(d))])
            return [Constraint(nodes, (0.0, 0.0, 0.0))]
        raise ConfigurationError("object.restraint: unknown kind %r"
                                 % self.restraint)

    def default_penalty_stiffness(self, mesh):
        """10 x (softest Young's modulus x mean element length)."""
        softest = min(m.young_modulus for m in self.materials.values())
        char = float(np.mean(hexa.characteristic_lengths(mesh.element_coords())))
        return 10.0 * softest * char

    def contact_parameters(self, mesh):
        k_n = self.contact.k_n or self.default_penalty_stiffness(mesh)
        k_t = self.contact.k_t or k_n
        mu = self.contact.mu
        if mu is None:
            mu = self.materials[self.object_material].friction
        return k_n, k_t, mu

    def closure_depths(self):
        if self.sweep.closure_depths is not None:
            return np.asarray(self.sweep.closure_depths, dtype=float)
        radius = self.object_dimensions.get("radius")
        if radius is None:
            raise ConfigurationError(
                "sweep.closure_depths: required for non-round objects")
        return np.linspace(0.04, 0.24, self.sweep.levels) * radius


# ---------------------------------------------------------------------------
# JSON parsing

def _parse_material(doc, path):
    _check_keys(doc, {"density", "model", "young_modulus", "poisson_ratio",
                      "friction", "rayleigh_mass_damping"}, path)
    try:
        return Material(
            density=float(_get(doc, "density", path, required=True)),
            model=_get(doc, "model", path, default="linear-elastic"),
            young_modulus=float(_get(doc, "young_modulus", path, required=True)),
            poisson_ratio=float(_get(doc, "poisson_ratio", path, 0.3)),
            friction=float(_get(doc, "friction", path, 0.0)),
            rayleigh_mass_damping=float(
                _get(doc, "rayleigh_mass_damping", path, 0.0)))
    except ValueError as exc:
        raise ConfigurationError("%s: %s" % (path, exc)) from exc


def _parse_pose(doc, path):
    _check_keys(doc, {"translation", "rotation"}, path)
    p = np.asarray(_get(doc, "translation", path, (0.0, 0.0, 0.0)), dtype=float)
    R = np.asarray(_get(doc, "rotation", path,
                        np.eye(3).tolist()), dtype=float)
    pose = Pose(R, p)
    _require(pose.orthonormality_error() < 1e-9, path,
             "rotation matrix is not orthonormal")
    return pose


def _parse_pad(doc, path):
    _check_keys(doc, {"kind", "half_extents", "center"}, path)
    kind = _get(doc, "kind", path, "box")
    _require(kind == "box", path, "only box pads are supported")
    return RigidSurface.box(
        [float(v) for v in _get(doc, "half_extents", path, required=True)],
        center=_get(doc, "center", path, (0.0, 0.0, 0.0)))


def _parse_link(doc, path):
    _check_keys(doc, {"name", "parent", "origin", "joint", "pad"}, path)
    joint_doc = _get(doc, "joint", path)
    if joint_doc is None:
        joint = Joint()
    else:
        _check_keys(joint_doc, {"type", "axis", "limits"}, path + ".joint")
        joint = Joint(kind=_get(joint_doc, "type", path + ".joint", "fixed"),
                      axis=_get(joint_doc, "axis", path + ".joint", (0, 0, 1)),
                      limits=tuple(_get(joint_doc, "limits", path + ".joint",
                                        (0.0, 0.0))))
    origin_doc = _get(doc, "origin", path)
    origin = _parse_pose(origin_doc, path + ".origin") if origin_doc \
        else Pose.identity()
    pad_doc = _get(doc, "pad", path)
    pad = _parse_pad(pad_doc, path + ".pad") if pad_doc else None
    return GripperLink(name=_get(doc, "name", path, required=True),
                       parent=_get(doc, "parent", path),
                       origin=origin, joint=joint, pad=pad)


def _parse_gripper(doc, path):
    _check_keys(doc, {"base_position", "base_rotation", "links",
                      "closure_rates", "thumb_link"}, path)
    links_doc = _get(doc, "links", path, required=True)
    links = [_parse_link(l, "%s.links[%d]" % (path, i))
             for i, l in enumerate(links_doc)]
    base_R = np.asarray(_get(doc, "base_rotation", path, np.eye(3).tolist()),
                        dtype=float)
    _require(Pose(base_R, np.zeros(3)).orthonormality_error() < 1e-9,
             path + ".base_rotation", "rotation matrix is not orthonormal")
    gripper = Gripper(
        links=links,
        base_position=np.asarray(_get(doc, "base_position", path,
                                      (0.0, 0.0, 0.0)), dtype=float),
        base_rotation=base_R,
        closure_rates={k: float(v) for k, v in
                       _get(doc, "closure_rates", path, {}).items()})
    thumb = _get(doc, "thumb_link", path, "thumb_proximal")
    names = {l.name for l in links}
    _require(thumb in names, path + ".thumb_link",
             "link %r is not defined" % thumb)
    return gripper, thumb


def scene_from_dict(doc, path="scene"):
    _check_keys(doc, {"object", "materials", "gravity", "gripper", "contact",
                      "sim", "sweep"}, path)

    obj = _get(doc, "object", path, required=True)
    _check_keys(obj, {"kind", "dimensions", "resolution", "material",
                      "restraint"}, path + ".object")
    kind = _get(obj, "kind", path + ".object", required=True)
    _require(kind in ("box", "cylinder", "sphere"), path + ".object.kind",
             "must be box, cylinder, or sphere")
    dims = dict(_get(obj, "dimensions", path + ".object", required=True))
    res = dict(_get(obj, "resolution", path + ".object", required=True))
    for key, val in dims.items():
        if key != "center":
            _require(float(val) > 0.0,
                     "%s.object.dimensions.%s" % (path, key),
                     "must be positive")

    materials_doc = _get(doc, "materials", path, required=True)
    materials = {name: _parse_material(m, "%s.materials.%s" % (path, name))
                 for name, m in materials_doc.items()}
    mat_name = _get(obj, "material", path + ".object", required=True)
    _require(mat_name in materials, path + ".object.material",
             "material %r is not defined" % mat_name)

    gripper_doc = _get(doc, "gripper", path, required=True)
    gripper, thumb = _parse_gripper(gripper_doc, path + ".gripper")

    contact_doc = _get(doc, "contact", path, {}) or {}
    _check_keys(contact_doc, {"k_n", "k_t", "mu", "activation_tolerance"},
                path + ".contact")
    contact = ContactSettings(
        k_n=contact_doc.get("k_n"), k_t=contact_doc.get("k_t"),
        mu=contact_doc.get("mu"),
        activation_tolerance=float(
            contact_doc.get("activation_tolerance", 0.0)))
    for key in ("k_n", "k_t"):
        val = getattr(contact, key)
        _require(val is None or val > 0.0, "%s.contact.%s" % (path, key),
                 "must be positive")
    _require(contact.mu is None or contact.mu >= 0.0, path + ".contact.mu",
             "must be >= 0")

    sim_doc = _get(doc, "sim", path, {}) or {}
    _check_keys(sim_doc, {"safety", "damping", "output_interval", "max_time"},
                path + ".sim")
    sim = SimSettings(
        safety=float(sim_doc.get("safety", 0.9)),
        damping=sim_doc.get("damping"),
        output_interval=float(sim_doc.get("output_interval", 0.01)),
        max_time=float(sim_doc.get("max_time", 8.0)))
    _require(0.0 < sim.safety <= 1.0, path + ".sim.safety",
             "must be in (0, 1]")
    _require(sim.damping is None or sim.damping >= 0.0, path + ".sim.damping",
             "must be >= 0")

    sweep_doc = _get(doc, "sweep", path, {}) or {}
    _check_keys(sweep_doc, {"levels", "closure_depths", "actuation_forces",
                            "pull"}, path + ".sweep")
    pull_doc = sweep_doc.get("pull", {}) or {}
    _check_keys(pull_doc, {"direction", "distance", "duration"},
                path + ".sweep.pull")
    sweep = SweepSettings(
        levels=int(sweep_doc.get("levels", 13)),
        closure_depths=sweep_doc.get("closure_depths"),
        actuation_forces=sweep_doc.get("actuation_forces"),
        pull_direction=np.asarray(pull_doc.get("direction", (0.0, 0.0, 1.0)),
                                  dtype=float),
        pull_distance=float(pull_doc.get("distance", 0.02)),
        pull_duration=pull_doc.get("duration"))
    _require(sweep.levels >= 1, path + ".sweep.levels", "must be >= 1")
    _require(sweep.pull_distance >= 0.0, path + ".sweep.pull.distance",
             "must be >= 0")
    if sweep.closure_depths is not None:
        _require(len(sweep.closure_depths) == sweep.levels,
                 path + ".sweep.closure_depths",
                 "must list one depth per level")

    return SceneConfig(
        object_kind=kind, object_dimensions=dims, object_resolution=res,
        object_material=mat_name,
        restraint=_get(obj, "restraint", path + ".object", "none"),
        materials=materials,
        gravity=np.asarray(_get(doc, "gravity", path, (0.0, 0.0, 0.0)),
                           dtype=float),
        gripper=gripper, thumb_link=thumb,
        contact=contact, sim=sim, sweep=sweep)


def load_scene(path):
    """Load and validate a scene JSON; ``builtin:<name>`` resolves shipped
    scenes."""
    path = builtin_scene_path(path)
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigurationError("%s: invalid JSON (%s)" % (path, exc))
    return scene_from_dict(doc)


def builtin_scene_path(name):
    """Map ``builtin:<scene>`` to the packaged scene file path."""
    text = str(name)
    if not text.startswith("builtin:"):
        return name
    from importlib.resources import files
    resource = files("softgrasp") / "scenes" / (text[len("builtin:"):] + ".json")
    return str(resource)


def gripper_to_dict(gripper, thumb_link):
    """Serialize a gripper (with box pads) to the scene JSON schema."""
    links = []
    for link in gripper.links:
        doc = {"name": link.name, "parent": link.parent}
        if not np.allclose(link.origin.R, np.eye(3)) \
                or np.any(link.origin.p != 0.0):
            doc["origin"] = {"translation": link.origin.p.tolist(),
                             "rotation": link.origin.R.tolist()}
        if link.joint.kind != "fixed":
            doc["joint"] = {"type": link.joint.kind,
                            "axis": link.joint.axis.tolist(),
                            "limits": list(link.joint.limits)}
        if link.pad is not None:
            spec = getattr(link.pad, "box_spec", None)
            if spec is None:
                raise ConfigurationError(
                    "link %r pad has no box provenance to serialize"
                    % link.name)
            doc["pad"] = {"kind": "box", **spec}
        links.append(doc)
    return {"base_position": gripper.base_position.tolist(),
            "base_rotation": gripper.base_rotation.tolist(),
            "thumb_link": thumb_link,
            "closure_rates": dict(gripper.closure_rates),
            "links": links}
