"""Hexahedral phantom meshes and triangulated rigid surfaces.

Deformable phantoms (box, cylinder, sphere) are meshed with all-hex
structured schemes: a plain grid for the box, a butterfly section (square
core plus four shell blocks) extruded along the axis for the cylinder, and
a spherified cube (core cube plus six shell blocks) for the sphere. Rigid
gripper geometry is triangulated and lives in a body-local frame; poses
are applied by the contact and pipeline layers.

Interchange formats:
  * mesh JSON: ``{"nodes": [[x,y,z],...], "elements": [[i0,...,i7],...],
    "element_material": [id,...]}``, 0-based indices, coordinates in meters;
  * VTK legacy ASCII v3.0 unstructured grids with VTK_HEXAHEDRON cells
    (type 12), floats printed with 17 significant digits so coordinates
    round-trip exactly in decimal form.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import hexahedron as hexa

__all__ = [
    "Mesh", "RigidSurface", "ValidationReport",
    "generate_box_mesh", "generate_cylinder_mesh", "generate_sphere_mesh",
    "validate_mesh", "write_vtk", "write_mesh_json", "read_mesh_json",
]


@dataclass(eq=False)
class Mesh:
    """Hexahedral mesh: reference coordinates, connectivity, material ids."""

    nodes: np.ndarray             # (n, 3) float, meters
    elements: np.ndarray          # (m, 8) int, VTK hexahedron ordering
    element_material: np.ndarray  # (m,) int

    def __post_init__(self):
        self.nodes = np.ascontiguousarray(np.asarray(self.nodes, dtype=float))
        self.elements = np.ascontiguousarray(np.asarray(self.elements, dtype=np.int64))
        self.element_material = np.ascontiguousarray(
            np.asarray(self.element_material, dtype=np.int64))
        if self.nodes.ndim != 2 or self.nodes.shape[1] != 3:
            raise ValueError("nodes must have shape (n, 3)")
        if self.elements.ndim != 2 or self.elements.shape[1] != 8:
            raise ValueError("elements must have shape (m, 8)")
        if self.element_material.shape != (len(self.elements),):
            raise ValueError("element_material must have one id per element")

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def n_elements(self):
        return len(self.elements)

    def element_coords(self):
        """Corner coordinates per element, shape (m, 8, 3)."""
        return self.nodes[self.elements]

    def boundary_faces(self):
        """Quad faces appearing in exactly one element, shape (f, 4).

        Faces keep the owning element's outward winding.
        """
        faces = self.elements[:, hexa.FACES].reshape(-1, 4)
        keys = np.sort(faces, axis=1)
        _, inverse, counts = np.unique(keys, axis=0,
                                       return_inverse=True, return_counts=True)
        return faces[counts[inverse] == 1]

    def boundary_nodes(self):
        """Sorted ids of nodes on the boundary surface."""
        return np.unique(self.boundary_faces())


@dataclass(eq=False)
class RigidSurface:
    """Triangulated rigid surface in a body-local frame.

    Normals are unit vectors consistent with the vertex winding
    (right-hand rule), recomputed on construction.
    """

    vertices: np.ndarray          # (v, 3) float, meters
    triangles: np.ndarray         # (t, 3) int
    normals: np.ndarray = field(default=None)  # (t, 3) unit outward

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(np.asarray(self.vertices, dtype=float))
        self.triangles = np.ascontiguousarray(np.asarray(self.triangles, dtype=np.int64))
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise ValueError("vertices must have shape (v, 3)")
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:
            raise ValueError("triangles must have shape (t, 3)")
        if self.triangles.size and self.triangles.max() >= len(self.vertices):
            raise ValueError("triangle index out of range")
        a = self.vertices[self.triangles[:, 0]]
        b = self.vertices[self.triangles[:, 1]]
        c = self.vertices[self.triangles[:, 2]]
        cross = np.cross(b - a, c - a)
        norms = np.linalg.norm(cross, axis=1)
        if np.any(norms < 1e-14):
            raise ValueError("degenerate (zero-area) triangle in rigid surface")
        self.normals = cross / norms[:, None]

    @property
    def n_triangles(self):
        return len(self.triangles)

    @staticmethod
    def box(half_extents, center=(0.0, 0.0, 0.0)):
        """Axis-aligned box surface (12 triangles, outward normals)."""
        hx, hy, hz = [float(h) for h in half_extents]
        if min(hx, hy, hz) <= 0.0:
            raise ValueError("box half extents must be positive")
        c = np.asarray(center, dtype=float)
        verts = np.array([[sx * hx, sy * hy, sz * hz]
                          for sz in (-1, 1) for sy in (-1, 1) for sx in (-1, 1)],
                         dtype=float) + c
        # vertex index = sx + 2*sy + 4*sz with s in {0,1}
        quads = [
            ([0, 2, 3, 1]),   # z-
            ([4, 5, 7, 6]),   # z+
            ([0, 1, 5, 4]),   # y-
            ([2, 6, 7, 3]),   # y+
            ([0, 4, 6, 2]),   # x-
            ([1, 3, 7, 5]),   # x+
        ]
        tris = []
        for q in quads:
            tris.append([q[0], q[1], q[2]])
            tris.append([q[0], q[2], q[3]])
        surface = RigidSurface(verts, np.array(tris))
        surface.box_spec = {"half_extents": [hx, hy, hz],
                            "center": [float(v) for v in c]}
        return surface


@dataclass
class ValidationReport:
    """Diagnostics from :func:`validate_mesh`; ``ok`` gates downstream use."""

    ok: bool
    min_jacobian: float
    element_min_jacobian: np.ndarray
    duplicate_node_elements: list
    out_of_range_elements: list
    nonfinite_nodes: bool

    def summary(self):
        lines = ["mesh %s" % ("ok" if self.ok else "NOT ok"),
                 "min Jacobian determinant: %.6e" % self.min_jacobian]
        if self.out_of_range_elements:
            lines.append("out-of-range connectivity in elements: %s"
                         % self.out_of_range_elements)
        if self.duplicate_node_elements:
            lines.append("repeated node index in elements: %s"
                         % self.duplicate_node_elements)
        if self.nonfinite_nodes:
            lines.append("non-finite node coordinates present")
        return "\n".join(lines)


def validate_mesh(mesh):
    """Check connectivity sanity and Jacobian positivity.

    Reports the per-element minimum Jacobian determinant over the 2x2x2
    integration points of the reference configuration; ``ok`` is true iff
    all determinants are positive and no connectivity violation exists.
    """
    n = mesh.n_nodes
    out_of_range = [int(e) for e in range(mesh.n_elements)
                    if (mesh.elements[e] < 0).any() or (mesh.elements[e] >= n).any()]
    duplicates = [int(e) for e in range(mesh.n_elements)
                  if len(set(mesh.elements[e].tolist())) != 8]
    nonfinite = not np.isfinite(mesh.nodes).all()

    elem_min = np.full(mesh.n_elements, np.nan)
    usable = np.ones(mesh.n_elements, dtype=bool)
    usable[out_of_range] = False
    if not nonfinite and usable.any():
        coords = mesh.nodes[mesh.elements[usable]]
        det = np.linalg.det(hexa.jacobians(coords, hexa.GAUSS_POINTS))
        elem_min[usable] = det.min(axis=1)

    finite_min = elem_min[np.isfinite(elem_min)]
    min_jac = float(finite_min.min()) if finite_min.size else float("nan")
    ok = (not out_of_range and not duplicates and not nonfinite
          and finite_min.size == mesh.n_elements and bool((finite_min > 0.0).all()))
    return ValidationReport(ok=ok, min_jacobian=min_jac,
                            element_min_jacobian=elem_min,
                            duplicate_node_elements=duplicates,
                            out_of_range_elements=out_of_range,
                            nonfinite_nodes=nonfinite)


def generate_box_mesh(extents, divisions, material_id=0):
    """Structured box grid spanning [0, e_x] x [0, e_y] x [0, e_z]."""
    extents = [float(e) for e in extents]
    divisions = [int(d) for d in divisions]
    if len(extents) != 3 or len(divisions) != 3:
        raise ValueError("extents and divisions must each have 3 entries")
    if min(extents) <= 0.0:
        raise ValueError("extents must be positive")
    if min(divisions) < 1:
        raise ValueError("divisions must be >= 1")
    nx, ny, nz = divisions
    xs = np.linspace(0.0, extents[0], nx + 1)
    ys = np.linspace(0.0, extents[1], ny + 1)
    zs = np.linspace(0.0, extents[2], nz + 1)
    X, Y, Z = np.meshgrid(xs, ys, zs, indexing="ij")
    nodes = np.column_stack([X.ravel(order="F"), Y.ravel(order="F"), Z.ravel(order="F")])

    def nid(i, j, k):
        return i + (nx + 1) * (j + (ny + 1) * k)

    elements = []
    for k in range(nz):
        for j in range(ny):
            for i in range(nx):
                elements.append([
                    nid(i, j, k), nid(i + 1, j, k),
                    nid(i + 1, j + 1, k), nid(i, j + 1, k),
                    nid(i, j, k + 1), nid(i + 1, j, k + 1),
                    nid(i + 1, j + 1, k + 1), nid(i, j + 1, k + 1),
                ])
    elements = np.array(elements, dtype=np.int64)
    material = np.full(len(elements), material_id, dtype=np.int64)
    return Mesh(nodes, elements, material)


class _NodePool:
    """Deduplicating node store keyed by rounded coordinates."""

    def __init__(self, scale):
        self._tol = 1e-9 * scale
        self._index = {}
        self.coords = []

    def add(self, point):
        key = tuple(np.round(np.asarray(point, dtype=float) / self._tol).astype(np.int64))
        idx = self._index.get(key)
        if idx is None:
            idx = len(self.coords)
            self._index[key] = idx
            self.coords.append(np.asarray(point, dtype=float))
        return idx

    def array(self):
        return np.array(self.coords)


def _butterfly_section(radius, n, pool):
    """2D butterfly disc: square core + 4 shell blocks, returns CCW quads.

    The core half-width is radius/2; each shell block interpolates linearly
    between the core edge and the circle arc. All quads are oriented
    counter-clockwise in the x-y plane.
    """
    a = 0.5 * radius
    quads = []

    def pid(x, y):
        return pool.add([x, y, 0.0])

    # Core grid, n x n quads.
    u = np.linspace(-a, a, n + 1)
    for j in range(n):
        for i in range(n):
            quads.append([pid(u[i], u[j]), pid(u[i + 1], u[j]),
                          pid(u[i + 1], u[j + 1]), pid(u[i], u[j + 1])])

    # Shell blocks: side s covers arc angles centered on 0, 90, 180, 270 deg.
    for s, theta0 in enumerate([-0.25 * np.pi, 0.25 * np.pi,
                                0.75 * np.pi, 1.25 * np.pi]):
        ids = np.empty((n + 1, n + 1), dtype=np.int64)
        for e in range(n + 1):
            t = e / n
            theta = theta0 + t * 0.5 * np.pi
            # Core edge walked in the same angular sense as the arc.
            if s == 0:    # right edge, y from -a to a
                edge = (a, -a + 2.0 * a * t)
            elif s == 1:  # top edge, x from a to -a
                edge = (a - 2.0 * a * t, a)
            elif s == 2:  # left edge, y from a to -a
                edge = (-a, a - 2.0 * a * t)
            else:         # bottom edge, x from -a to a
                edge = (-a + 2.0 * a * t, -a)
            arc = (radius * np.cos(theta), radius * np.sin(theta))
            for layer in range(n + 1):
                tau = layer / n
                x = (1.0 - tau) * edge[0] + tau * arc[0]
                y = (1.0 - tau) * edge[1] + tau * arc[1]
                ids[e, layer] = pid(x, y)
        for e in range(n):
            for layer in range(n):
                quads.append([ids[e, layer], ids[e + 1, layer],
                              ids[e + 1, layer + 1], ids[e, layer + 1]])

    # Enforce CCW orientation in the plane.
    coords = pool.array()
    oriented = []
    for q in quads:
        p = coords[q, :2]
        area = 0.5 * np.sum(p[:, 0] * np.roll(p[:, 1], -1)
                            - np.roll(p[:, 0], -1) * p[:, 1])
        oriented.append(q if area > 0 else q[::-1])
    return oriented


def generate_cylinder_mesh(radius, length, radial_resolution, axial_resolution,
                           material_id=0):
    """All-hex cylinder: butterfly section extruded along z in [0, length]."""
    radius = float(radius)
    length = float(length)
    if radius <= 0.0 or length <= 0.0:
        raise ValueError("radius and length must be positive")
    n = int(radial_resolution)
    na = int(axial_resolution)
    if n < 1 or na < 1:
        raise ValueError("resolutions must be >= 1")

    pool = _NodePool(scale=radius)
    quads = _butterfly_section(radius, n, pool)
    section = pool.array()[:, :2]
    n_sec = len(section)

    zs = np.linspace(0.0, length, na + 1)
    nodes = np.empty((n_sec * (na + 1), 3))
    for k, z in enumerate(zs):
        nodes[k * n_sec:(k + 1) * n_sec, :2] = section
        nodes[k * n_sec:(k + 1) * n_sec, 2] = z

    elements = []
    for k in range(na):
        lo = k * n_sec
        hi = (k + 1) * n_sec
        for q in quads:
            elements.append([lo + q[0], lo + q[1], lo + q[2], lo + q[3],
                             hi + q[0], hi + q[1], hi + q[2], hi + q[3]])
    elements = np.array(elements, dtype=np.int64)
    material = np.full(len(elements), material_id, dtype=np.int64)
    return Mesh(nodes, elements, material)


def generate_sphere_mesh(radius, resolution, material_id=0):
    """All-hex sphere: spherified cube (core cube + 6 shell blocks)."""
    radius = float(radius)
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    n = int(resolution)
    if n < 1:
        raise ValueError("resolution must be >= 1")

    a = 0.5 * radius
    pool = _NodePool(scale=radius)

    def pid(p):
        return pool.add(p)

    # Core cube grid.
    u = np.linspace(-1.0, 1.0, n + 1)
    core = np.empty((n + 1, n + 1, n + 1), dtype=np.int64)
    for k in range(n + 1):
        for j in range(n + 1):
            for i in range(n + 1):
                core[i, j, k] = pid([a * u[i], a * u[j], a * u[k]])

    hexes = []
    for k in range(n):
        for j in range(n):
            for i in range(n):
                hexes.append([core[i, j, k], core[i + 1, j, k],
                              core[i + 1, j + 1, k], core[i, j + 1, k],
                              core[i, j, k + 1], core[i + 1, j, k + 1],
                              core[i + 1, j + 1, k + 1], core[i, j + 1, k + 1]])

    # Shell blocks: one per cube face. Face frame (e1, e2, out).
    face_axes = [
        (np.array([0, 1, 0]), np.array([0, 0, 1]), np.array([1, 0, 0])),
        (np.array([0, 1, 0]), np.array([0, 0, 1]), np.array([-1, 0, 0])),
        (np.array([1, 0, 0]), np.array([0, 0, 1]), np.array([0, 1, 0])),
        (np.array([1, 0, 0]), np.array([0, 0, 1]), np.array([0, -1, 0])),
        (np.array([1, 0, 0]), np.array([0, 1, 0]), np.array([0, 0, 1])),
        (np.array([1, 0, 0]), np.array([0, 1, 0]), np.array([0, 0, -1])),
    ]
    for e1, e2, out in face_axes:
        ids = np.empty((n + 1, n + 1, n + 1), dtype=np.int64)
        for j in range(n + 1):
            for i in range(n + 1):
                unit = out + u[i] * e1 + u[j] * e2          # point on unit cube face
                inner = a * unit                            # matching core face point
                direction = unit / np.linalg.norm(unit)     # spherified direction
                outer = radius * direction
                for layer in range(n + 1):
                    tau = layer / n
                    ids[i, j, layer] = pid((1.0 - tau) * inner + tau * outer)
        for layer in range(n):
            for j in range(n):
                for i in range(n):
                    hexes.append([ids[i, j, layer], ids[i + 1, j, layer],
                                  ids[i + 1, j + 1, layer], ids[i, j + 1, layer],
                                  ids[i, j, layer + 1], ids[i + 1, j, layer + 1],
                                  ids[i + 1, j + 1, layer + 1], ids[i, j + 1, layer + 1]])

    nodes = pool.array()
    elements = np.array(hexes, dtype=np.int64)

    # Fix winding of blocks whose local frame came out left-handed.
    coords = nodes[elements]
    det = np.linalg.det(hexa.jacobians(coords, np.zeros((1, 3))))[:, 0]
    flip = det <= 0.0
    if flip.any():
        perm = [1, 0, 3, 2, 5, 4, 7, 6]   # mirrors the xi axis
        elements[flip] = elements[flip][:, perm]

    material = np.full(len(elements), material_id, dtype=np.int64)
    return Mesh(nodes, elements, material)


def _format_floats(values):
    return " ".join("%.17g" % v for v in values)


def write_vtk(mesh, nodal_fields, element_fields, path, title="softgrasp output"):
    """Write a legacy-ASCII VTK unstructured grid (VTK_HEXAHEDRON cells).

    nodal_fields / element_fields: mappings name -> array of shape (n,) or
    (n, 3) matching the node/element count; pass empty dicts (or None) for
    geometry-only output.
    """
    nodal_fields = dict(nodal_fields or {})
    element_fields = dict(element_fields or {})
    for name, arr in nodal_fields.items():
        if len(np.asarray(arr)) != mesh.n_nodes:
            raise ValueError("nodal field %r has length %d, expected %d"
                             % (name, len(np.asarray(arr)), mesh.n_nodes))
    for name, arr in element_fields.items():
        if len(np.asarray(arr)) != mesh.n_elements:
            raise ValueError("element field %r has length %d, expected %d"
                             % (name, len(np.asarray(arr)), mesh.n_elements))

    lines = ["# vtk DataFile Version 3.0", title, "ASCII",
             "DATASET UNSTRUCTURED_GRID",
             "POINTS %d double" % mesh.n_nodes]
    for p in mesh.nodes:
        lines.append(_format_floats(p))
    lines.append("CELLS %d %d" % (mesh.n_elements, 9 * mesh.n_elements))
    for conn in mesh.elements:
        lines.append("8 " + " ".join(str(int(i)) for i in conn))
    lines.append("CELL_TYPES %d" % mesh.n_elements)
    lines.extend(["12"] * mesh.n_elements)

    def field_block(fields, count, header):
        if not fields:
            return
        lines.append("%s %d" % (header, count))
        for name, arr in fields.items():
            arr = np.asarray(arr, dtype=float)
            if arr.ndim == 1:
                lines.append("SCALARS %s double 1" % name)
                lines.append("LOOKUP_TABLE default")
                for v in arr:
                    lines.append("%.17g" % v)
            elif arr.ndim == 2 and arr.shape[1] == 3:
                lines.append("VECTORS %s double" % name)
                for v in arr:
                    lines.append(_format_floats(v))
            else:
                raise ValueError("field %r must be (n,) or (n, 3)" % name)

    field_block(nodal_fields, mesh.n_nodes, "POINT_DATA")
    field_block(element_fields, mesh.n_elements, "CELL_DATA")

    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_mesh_json(mesh, path):
    """Serialize a mesh to the JSON interchange schema."""
    doc = {
        "nodes": [["%.17g" % c for c in p] for p in mesh.nodes],
        "elements": mesh.elements.tolist(),
        "element_material": mesh.element_material.tolist(),
    }
    # Coordinates as numbers, not strings: round-trip via float() of %.17g.
    doc["nodes"] = [[float(c) for c in row] for row in doc["nodes"]]
    with open(path, "w") as fh:
        json.dump(doc, fh)


def read_mesh_json(path):
    """Load a mesh from the JSON interchange schema."""
    with open(path) as fh:
        doc = json.load(fh)
    for key in ("nodes", "elements", "element_material"):
        if key not in doc:
            raise ValueError("mesh JSON missing key %r" % key)
    return Mesh(np.asarray(doc["nodes"], dtype=float),
                np.asarray(doc["elements"], dtype=np.int64),
                np.asarray(doc["element_material"], dtype=np.int64))
