"""softgrasp: desk-scale grasp-and-pull stability analysis.

Two engines over one scene description:

* a rigid engine (``softgrasp.rigid``): gripper forward kinematics, point
  contacts against rigid primitives, friction-cone grasp equilibrium and
  Coulomb pull-resistance bounds;
* a deformable engine (``softgrasp.fem`` + ``softgrasp.contact``): explicit
  dynamic nonlinear FEM on hexahedral phantom meshes with penalty friction
  contact against the rigid gripper surfaces.

``softgrasp.pipeline`` hands the gripper pose/joint trajectory from the
rigid engine to the deformable one and runs the grip-tightness sweep that
compares normal versus lateral contact forces between the two.
"""

from .errors import (ConfigurationError, ConvergenceError, DivergenceError,
                     ElementInversionError, RigidPenetrationError,
                     SoftGraspError)
from .mesh import (Mesh, RigidSurface, ValidationReport, generate_box_mesh,
                   generate_cylinder_mesh, generate_sphere_mesh,
                   read_mesh_json, validate_mesh, write_mesh_json, write_vtk)

__version__ = "0.1.0"
