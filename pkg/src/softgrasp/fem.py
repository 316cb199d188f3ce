"""Explicit dynamic nonlinear FEM on hexahedral meshes.

Formulation choices, fixed for the whole package:

* total Lagrangian kinematics: F = I + grad0(u) from reference-configuration
  shape-function gradients; internal forces are integrated in the reference
  volume using the first Piola-Kirchhoff stress P = J sigma F^-T;
* full 2x2x2 Gauss quadrature per hexahedron (no hourglass control needed);
* row-sum lumped mass, so the explicit update inverts a diagonal matrix;
* central-difference (leapfrog) time integration with mass-proportional
  damping: SimState.v holds the half-step velocity, displacements advance
  with the freshly updated velocity;
* the stable timestep is safety * min over elements of (characteristic
  length / dilatational wave speed), with characteristic length = element
  volume / largest face area.

Two constitutive models are provided. "linear-elastic" is the Saint
Venant-Kirchhoff law (stress linear in the Green-Lagrange strain), which
coincides with small-strain isotropic elasticity for verification loads.
"neo-hookean" is the compressible form

    W = mu/2 (tr(F^T F) - 3) - mu ln J + lambda/2 (ln J)^2,

whose Kirchhoff stress vanishes at F = I and under pure rotations.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass, field

import numpy as np

from . import hexahedron as hexa
from .errors import (ConfigurationError, ConvergenceError, DivergenceError,
                     ElementInversionError)

__all__ = [
    "Material", "SimState", "StrainResult", "Constraint", "LoadCase",
    "lumped_mass", "lumped_damping", "stress", "internal_forces",
    "internal_forces_and_energy", "strain_energy", "external_forces",
    "stable_timestep",
    "estimate_critical_timestep", "driver_timestep", "step_explicit",
    "run_to_quasistatic", "deformation_gradient", "principal_strains",
    "kinetic_energy", "max_principal_strain_field",
]

MODELS = ("linear-elastic", "neo-hookean")


@dataclass(frozen=True)
class Material:
    """Density, constitutive parameters, friction, and mass damping."""

    density: float                    # kg/m^3
    model: str = "linear-elastic"     # one of MODELS
    young_modulus: float = 1e6        # Pa
    poisson_ratio: float = 0.3
    friction: float = 0.0             # Coulomb coefficient at contacts
    rayleigh_mass_damping: float = 0.0  # c_m, 1/s

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError("unknown material model %r" % (self.model,))
        if self.density <= 0.0:
            raise ValueError("density must be positive")
        if self.young_modulus <= 0.0:
            raise ValueError("young_modulus must be positive")
        if not 0.0 <= self.poisson_ratio < 0.5:
            raise ValueError("poisson_ratio must satisfy 0 <= nu < 0.5")
        if self.friction < 0.0:
            raise ValueError("friction must be >= 0")
        if self.rayleigh_mass_damping < 0.0:
            raise ValueError("rayleigh_mass_damping must be >= 0")

    @property
    def lame_lambda(self):
        e, nu = self.young_modulus, self.poisson_ratio
        return e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))

    @property
    def lame_mu(self):
        return self.young_modulus / (2.0 * (1.0 + self.poisson_ratio))

    @property
    def dilatational_wave_speed(self):
        """sqrt(E (1-nu) / ((1+nu)(1-2nu) rho)), m/s."""
        e, nu = self.young_modulus, self.poisson_ratio
        return np.sqrt(e * (1.0 - nu)
                       / ((1.0 + nu) * (1.0 - 2.0 * nu) * self.density))


@dataclass
class SimState:
    """Nodal kinematics of the explicit run.

    ``v`` is the leapfrog half-step velocity (one half step behind ``u``);
    ``a`` is the acceleration used for the latest velocity update.
    """

    u: np.ndarray   # (n, 3) displacements, m
    v: np.ndarray   # (n, 3) velocities, m/s
    a: np.ndarray   # (n, 3) accelerations, m/s^2
    t: float = 0.0  # s

    @staticmethod
    def zero(n_nodes):
        return SimState(np.zeros((n_nodes, 3)), np.zeros((n_nodes, 3)),
                        np.zeros((n_nodes, 3)), 0.0)

    def copy(self):
        return SimState(self.u.copy(), self.v.copy(), self.a.copy(), self.t)

    def is_finite(self):
        return bool(np.isfinite(self.u).all() and np.isfinite(self.v).all()
                    and np.isfinite(self.a).all())


@dataclass
class StrainResult:
    """Finite-strain measures at one evaluation point."""

    F: np.ndarray                    # (3, 3) deformation gradient
    E_green: np.ndarray              # (3, 3) Green-Lagrange tensor
    principal_stretches: np.ndarray  # (3,) descending
    principal_directions: np.ndarray  # (3, 3), row i pairs with stretch i
    e: np.ndarray                    # (3,) principal strains, stretch - 1
    e_max: float
    e_min: float


@dataclass
class Constraint:
    """Prescribed displacement (and velocity) on a node set.

    ``mask`` selects the constrained components; unmasked components evolve
    freely. Values may be a single 3-vector or one row per node.
    """

    nodes: np.ndarray
    displacement: np.ndarray
    velocity: np.ndarray = None
    mask: np.ndarray = field(default_factory=lambda: np.ones(3, dtype=bool))

    def __post_init__(self):
        self.nodes = np.atleast_1d(np.asarray(self.nodes, dtype=np.int64))
        self.displacement = np.broadcast_to(
            np.asarray(self.displacement, dtype=float),
            (len(self.nodes), 3)).copy()
        if self.velocity is None:
            self.velocity = np.zeros((len(self.nodes), 3))
        else:
            self.velocity = np.broadcast_to(
                np.asarray(self.velocity, dtype=float),
                (len(self.nodes), 3)).copy()
        self.mask = np.asarray(self.mask, dtype=bool).reshape(3)

    def apply(self, state):
        m = self.mask
        state.u[np.ix_(self.nodes, np.flatnonzero(m))] = self.displacement[:, m]
        state.v[np.ix_(self.nodes, np.flatnonzero(m))] = self.velocity[:, m]
        state.a[np.ix_(self.nodes, np.flatnonzero(m))] = 0.0


@dataclass
class LoadCase:
    """External loading + kinematic constraints for a run."""

    gravity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    tractions: list = field(default_factory=list)   # [(facets (f,4), vector (3,))]
    constraints: list = field(default_factory=list)

    def __post_init__(self):
        self.gravity = np.asarray(self.gravity, dtype=float).reshape(3)


# ---------------------------------------------------------------------------
# per-mesh precomputation

class _MeshOperators:
    def __init__(self, mesh):
        coords = mesh.element_coords()
        self.grad0, self.wdetj = hexa.reference_operators(coords)
        self.grad0 = np.ascontiguousarray(self.grad0)
        # (m, 8, q*3) layout: one batched GEMM per element covers all
        # quadrature points at once in the gradient/force contractions
        m, q = self.wdetj.shape
        self.grad0_flat = np.ascontiguousarray(
            self.grad0.transpose(0, 2, 1, 3).reshape(m, 8, q * 3))
        self.n_quad = q
        self.volumes = self.wdetj.sum(axis=1)
        self.char_lengths = hexa.characteristic_lengths(coords)
        self.conn_flat = mesh.elements.ravel()
        bf = mesh.boundary_faces()
        self.boundary_faces = bf
        self.boundary_face_keys = {tuple(sorted(f)) for f in bf.tolist()}


_OPERATOR_CACHE = weakref.WeakKeyDictionary()


def _operators(mesh):
    ops = _OPERATOR_CACHE.get(mesh)
    if ops is None:
        ops = _MeshOperators(mesh)
        _OPERATOR_CACHE[mesh] = ops
    return ops


def _material_map(mesh, materials):
    """Normalize to {material_id: Material}; a bare Material covers all ids."""
    if isinstance(materials, Material):
        return {int(mid): materials for mid in np.unique(mesh.element_material)}
    return materials


def _material_arrays(mesh, materials):
    """Per-element (rho, lambda, mu, is_neo, c_m) arrays from the id map."""
    materials = _material_map(mesh, materials)
    ids = mesh.element_material
    rho = np.empty(len(ids))
    lam = np.empty(len(ids))
    mu = np.empty(len(ids))
    neo = np.zeros(len(ids), dtype=bool)
    cm = np.empty(len(ids))
    for mid in np.unique(ids):
        mat = materials.get(int(mid))
        if mat is None:
            raise ConfigurationError("no material defined for id %d" % mid)
        sel = ids == mid
        rho[sel] = mat.density
        lam[sel] = mat.lame_lambda
        mu[sel] = mat.lame_mu
        neo[sel] = mat.model == "neo-hookean"
        cm[sel] = mat.rayleigh_mass_damping
    return rho, lam, mu, neo, cm


# ---------------------------------------------------------------------------
# small-tensor kernels (vectorized over leading axes)

def _det33(F):
    return (F[..., 0, 0] * (F[..., 1, 1] * F[..., 2, 2] - F[..., 1, 2] * F[..., 2, 1])
            - F[..., 0, 1] * (F[..., 1, 0] * F[..., 2, 2] - F[..., 1, 2] * F[..., 2, 0])
            + F[..., 0, 2] * (F[..., 1, 0] * F[..., 2, 1] - F[..., 1, 1] * F[..., 2, 0]))


def _cofactor33(F):
    """Cofactor matrix: F^{-T} = cof(F) / det(F)."""
    c = np.empty_like(F)
    c[..., 0, 0] = F[..., 1, 1] * F[..., 2, 2] - F[..., 1, 2] * F[..., 2, 1]
    c[..., 0, 1] = F[..., 1, 2] * F[..., 2, 0] - F[..., 1, 0] * F[..., 2, 2]
    c[..., 0, 2] = F[..., 1, 0] * F[..., 2, 1] - F[..., 1, 1] * F[..., 2, 0]
    c[..., 1, 0] = F[..., 0, 2] * F[..., 2, 1] - F[..., 0, 1] * F[..., 2, 2]
    c[..., 1, 1] = F[..., 0, 0] * F[..., 2, 2] - F[..., 0, 2] * F[..., 2, 0]
    c[..., 1, 2] = F[..., 0, 1] * F[..., 2, 0] - F[..., 0, 0] * F[..., 2, 1]
    c[..., 2, 0] = F[..., 0, 1] * F[..., 1, 2] - F[..., 0, 2] * F[..., 1, 1]
    c[..., 2, 1] = F[..., 0, 2] * F[..., 1, 0] - F[..., 0, 0] * F[..., 1, 2]
    c[..., 2, 2] = F[..., 0, 0] * F[..., 1, 1] - F[..., 0, 1] * F[..., 1, 0]
    return c


def _neo_hookean_pw(F, lam, mu, J, cof):
    """P and W for the compressible neo-Hookean law (J, cof precomputed)."""
    FinvT = cof / J[..., None, None]
    lnJ = np.log(J, where=J > 0, out=np.zeros_like(J))
    lamb = lam[..., None, None]
    mub = mu[..., None, None]
    P = mub * (F - FinvT) + lamb * lnJ[..., None, None] * FinvT
    I1 = (F * F).sum(axis=(-2, -1))
    W = 0.5 * mu * (I1 - 3.0) - mu * lnJ + 0.5 * lam * lnJ ** 2
    return P, W


def _svk_pw(F, lam, mu):
    """P and W for the Saint Venant-Kirchhoff law."""
    E = 0.5 * (np.swapaxes(F, -1, -2) @ F - np.eye(3))
    trE = E[..., 0, 0] + E[..., 1, 1] + E[..., 2, 2]
    lamb = lam[..., None, None]
    mub = mu[..., None, None]
    S = lamb * trE[..., None, None] * np.eye(3) + 2.0 * mub * E
    P = F @ S
    W = 0.5 * lam * trE ** 2 + mu * (E * E).sum(axis=(-2, -1))
    return P, W


def _pk1(F, lam, mu, neo):
    """First Piola-Kirchhoff stress; lam/mu/neo broadcast over F[..., 3, 3]."""
    P, W, J = _pk1_and_energy(F, lam, mu, neo)
    return P, J


def _pk1_and_energy(F, lam, mu, neo):
    """Stress and strain-energy density in one sweep over the models."""
    J = _det33(F)
    if np.all(neo):
        P, W = _neo_hookean_pw(F, lam, mu, J, _cofactor33(F))
    elif not np.any(neo):
        P, W = _svk_pw(F, lam, mu)
    else:
        lam_b = np.broadcast_to(lam, J.shape)
        mu_b = np.broadcast_to(mu, J.shape)
        neo_b = np.broadcast_to(neo, J.shape)
        P = np.empty_like(F)
        W = np.empty(J.shape)
        Pn, Wn = _neo_hookean_pw(F[neo_b], lam_b[neo_b], mu_b[neo_b],
                                 J[neo_b], _cofactor33(F[neo_b]))
        P[neo_b], W[neo_b] = Pn, Wn
        Ps, Ws = _svk_pw(F[~neo_b], lam_b[~neo_b], mu_b[~neo_b])
        P[~neo_b], W[~neo_b] = Ps, Ws
    return P, W, J


def _energy_density(F, lam, mu, neo):
    _, W, J = _pk1_and_energy(F, lam, mu, neo)
    return W, J


def _check_positive_j(J, neo=None):
    """Raise ElementInversionError naming the worst element if any J <= 0."""
    bad = J <= 0.0
    if neo is not None:
        bad = bad & np.broadcast_to(neo, J.shape)
    if np.any(bad):
        flat = np.where(bad, J, np.inf)
        idx = np.unravel_index(int(np.argmin(flat)), J.shape)
        raise ElementInversionError(element_id=int(idx[0]), det=float(J[idx]))


# ---------------------------------------------------------------------------
# spec operations

def lumped_mass(mesh, materials):
    """Row-sum lumped nodal masses, kg; total equals sum of rho * volume."""
    ops = _operators(mesh)
    rho, _, _, _, _ = _material_arrays(mesh, materials)
    shp = hexa.shape_functions(hexa.GAUSS_POINTS)          # (q, 8)
    elem_mass = np.einsum('e,eq,qa->ea', rho, ops.wdetj, shp)
    mass = np.zeros(mesh.n_nodes)
    np.add.at(mass, mesh.elements, elem_mass)
    return mass


def lumped_damping(mesh, materials):
    """Nodal mass-proportional damping coefficients C_ii = sum_e c_m m_i^e."""
    ops = _operators(mesh)
    rho, _, _, _, cm = _material_arrays(mesh, materials)
    shp = hexa.shape_functions(hexa.GAUSS_POINTS)
    elem = np.einsum('e,e,eq,qa->ea', cm, rho, ops.wdetj, shp)
    damping = np.zeros(mesh.n_nodes)
    np.add.at(damping, mesh.elements, elem)
    return damping


def stress(F, material):
    """Cauchy stress for one deformation gradient under the given material."""
    F = np.asarray(F, dtype=float).reshape(3, 3)
    J = float(_det33(F))
    if J <= 0.0:
        raise ElementInversionError(det=J)
    lam, mu = material.lame_lambda, material.lame_mu
    if material.model == "neo-hookean":
        B = F @ F.T
        sigma = (mu * (B - np.eye(3)) + lam * np.log(J) * np.eye(3)) / J
    else:
        E = 0.5 * (F.T @ F - np.eye(3))
        S = lam * np.trace(E) * np.eye(3) + 2.0 * mu * E
        sigma = F @ S @ F.T / J
    return 0.5 * (sigma + sigma.T)


def _deformation_gradients(mesh, u, ops):
    u_el = u[mesh.elements]                                 # (m, 8, 3)
    # H[e,q,i,j] = sum_a u[e,a,i] grad0[e,q,a,j]: one (3x8)@(8, q*3) GEMM
    # per element covering all quadrature points
    m, q = ops.wdetj.shape
    H = np.matmul(u_el.transpose(0, 2, 1), ops.grad0_flat)  # (m, 3, q*3)
    H = H.reshape(m, 3, q, 3).transpose(0, 2, 1, 3)
    return H + np.eye(3)


def _assemble_nodal(mesh, ops, f_el):
    """Scatter per-element nodal vectors (m, 8, 3) onto the nodes."""
    flat = ops.conn_flat
    n = mesh.n_nodes
    return np.column_stack([
        np.bincount(flat, weights=f_el[:, :, k].ravel(), minlength=n)
        for k in range(3)])


def internal_forces(mesh, state, materials):
    """Assembled internal nodal forces from the constitutive response.

    For an unconstrained body the entries sum to zero (partition of unity),
    and the vector equals the gradient of the total strain energy with
    respect to the nodal displacements.
    """
    f, _ = internal_forces_and_energy(mesh, state, materials)
    return f


def internal_forces_and_energy(mesh, state, materials):
    """Internal force vector and total strain energy from one sweep."""
    ops = _operators(mesh)
    _, lam, mu, neo, _ = _material_arrays(mesh, materials)
    F = _deformation_gradients(mesh, state.u, ops)
    P, W, J = _pk1_and_energy(F, lam[:, None], mu[:, None], neo[:, None])
    _check_positive_j(J)
    # f[e,a,i] = sum_{q,j} w detJ[e,q] grad0[e,q,a,j] P[e,q,i,j]:
    # weight P, flatten (q, j), one (8, q*3)@(q*3, 3) GEMM per element
    m, q = ops.wdetj.shape
    Pw = P * ops.wdetj[:, :, None, None]
    Pw_flat = Pw.transpose(0, 1, 3, 2).reshape(m, q * 3, 3)
    f_el = np.matmul(ops.grad0_flat, Pw_flat)               # (m, 8, 3)
    f = _assemble_nodal(mesh, ops, f_el)
    return f, float((ops.wdetj * W).sum())


def strain_energy(mesh, state, materials):
    """Total hyperelastic strain energy of the current displacement field."""
    ops = _operators(mesh)
    _, lam, mu, neo, _ = _material_arrays(mesh, materials)
    F = _deformation_gradients(mesh, state.u, ops)
    W, J = _energy_density(F, lam[:, None], mu[:, None], neo[:, None])
    _check_positive_j(J)
    return float((ops.wdetj * W).sum())


def external_forces(mesh, materials, body_accel, tractions=()):
    """Nodal external forces: lumped body force plus surface tractions.

    ``tractions`` is a sequence of (facets, vector) pairs where facets is an
    (f, 4) array of boundary-face node quadruples and vector a traction in
    Pa. Facets must be boundary faces of the mesh.
    """
    ops = _operators(mesh)
    body = np.asarray(body_accel, dtype=float).reshape(3)
    mass = lumped_mass(mesh, materials)
    f = mass[:, None] * body

    for facets, vector in tractions:
        facets = np.atleast_2d(np.asarray(facets, dtype=np.int64))
        vector = np.asarray(vector, dtype=float).reshape(3)
        for face in facets:
            if tuple(sorted(face.tolist())) not in ops.boundary_face_keys:
                raise ValueError("traction facet %s is not a boundary face"
                                 % (face.tolist(),))
        coords = mesh.nodes[facets]                          # (f, 4, 3)
        darea = hexa.quad_area_elements(coords)              # (f, q)
        shp = hexa.quad_shape_functions(hexa.QUAD_GAUSS)     # (q, 4)
        contrib = np.einsum('fq,qa,i->fai', darea, shp, vector)
        np.add.at(f, facets, contrib)
    return f


def stable_timestep(mesh, materials, safety=0.9):
    """CFL-stable explicit timestep, s."""
    if not 0.0 < safety <= 1.0:
        raise ValueError("safety factor must be in (0, 1]")
    ops = _operators(mesh)
    materials = _material_map(mesh, materials)
    ids = mesh.element_material
    speed = np.empty(mesh.n_elements)
    for mid in np.unique(ids):
        mat = materials.get(int(mid))
        if mat is None:
            raise ConfigurationError("no material defined for id %d" % mid)
        speed[ids == mid] = mat.dilatational_wave_speed
    return float(safety * np.min(ops.char_lengths / speed))


def estimate_critical_timestep(mesh, materials, state=None, iters=30):
    """Critical explicit timestep 2/omega_max from the tangent stiffness.

    The CFL formula of :func:`stable_timestep` estimates the dilatational
    transit time per element; with full 2x2x2 integration the highest
    parametric element mode can exceed that bound by a factor up to ~sqrt(3)
    (worst near nu = 0.5). This routine power-iterates M^-1 K, with K
    applied matrix-free through internal-force differences about the given
    state, and returns 2/omega_max. Deterministic (fixed start vector).
    """
    if state is None:
        state = SimState.zero(mesh.n_nodes)
    mass = lumped_mass(mesh, materials)
    f0 = internal_forces(mesh, state, materials)
    scale = float(np.abs(mesh.nodes).max()) or 1.0
    eps = 1e-7 * scale
    rng = np.random.default_rng(0)
    v = rng.standard_normal((mesh.n_nodes, 3))
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        pert = state.copy()
        pert.u = state.u + eps * v
        Av = (internal_forces(mesh, pert, materials) - f0) / eps
        Av /= mass[:, None]
        lam = float(np.einsum('ij,ij->', v, Av))
        norm = np.linalg.norm(Av)
        if norm == 0.0:
            break
        v = Av / norm
    omega = np.sqrt(max(lam, 0.0))
    if omega == 0.0:
        return np.inf
    return 2.0 / omega


def driver_timestep(mesh, materials, safety=0.9, state=None):
    """Timestep for the internal drivers: CFL estimate capped by the
    power-iteration stability bound (with a 0.9 margin for tangent
    stiffening during the run)."""
    dt_cfl = stable_timestep(mesh, materials, safety)
    dt_crit = estimate_critical_timestep(mesh, materials, state)
    return min(dt_cfl, 0.9 * safety * dt_crit)


def step_explicit(state, mass, f_ext, f_int, f_contact, dt, constraints=(),
                  damping=None, step_index=None):
    """One central-difference step of M dv = f_ext - f_int - f_contact - C v.

    ``f_contact`` carries the constraint-side sign of the contact term in
    the momentum balance: subtracting it accelerates penetrating nodes
    along their outward contact normals (pass the vector assembled by
    :meth:`softgrasp.contact.PenaltyContact.forces` directly, or zeros).
    ``damping`` is the diagonal of C = c_m M (see :func:`lumped_damping`).

    Prescribed-displacement constraints overwrite their degrees of freedom
    after the update. Raises DivergenceError if the state goes non-finite.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    rhs = f_ext - f_int - f_contact
    if damping is not None:
        rhs = rhs - damping[:, None] * state.v
    a = rhs / mass[:, None]
    v_new = state.v + dt * a
    u_new = state.u + dt * v_new
    new = SimState(u_new, v_new, a, state.t + dt)
    for c in constraints:
        c.apply(new)
    if not new.is_finite():
        raise DivergenceError(step_index if step_index is not None else -1,
                              time=new.t)
    return new


def kinetic_energy(mass, v):
    return float(0.5 * np.sum(mass * np.einsum('ij,ij->i', v, v)))


def run_to_quasistatic(mesh, materials, loads, max_time, *, safety=0.9,
                       state=None, contact=None, energy_ratio=1e-4,
                       on_step=None):
    """Dynamic relaxation to a quasi-static state.

    Steps the damped explicit dynamics until the kinetic energy drops below
    ``energy_ratio`` times the internal strain energy (both nonzero), and
    returns that state. With no external loading (and no initial motion or
    deflection) the initial state is already static and returned as-is.

    ``contact``: optional :class:`softgrasp.contact.PenaltyContact` whose
    surfaces are held fixed during the relaxation. ``on_step`` is called as
    ``on_step(state, contacts)`` after every step (histories, output).

    Raises ConvergenceError (carrying the final energy ratio) if the
    criterion is not met by ``max_time``.
    """
    if state is None:
        state = SimState.zero(mesh.n_nodes)
    else:
        state = state.copy()

    mass = lumped_mass(mesh, materials)
    damping = lumped_damping(mesh, materials)
    f_ext = external_forces(mesh, materials, loads.gravity, loads.tractions)
    for c in loads.constraints:
        c.apply(state)

    quiet = (np.all(f_ext == 0.0) and contact is None
             and not np.any(state.u) and not np.any(state.v))
    if quiet:
        return state

    dt = driver_timestep(mesh, materials, safety, state)
    if contact is not None:
        dt = min(dt, contact.stable_timestep(mass, safety))

    ratio = np.inf
    step = 0
    while state.t < max_time:
        f_int, se = internal_forces_and_energy(mesh, state, materials)
        if contact is not None:
            f_con, contacts = contact.forces(mesh.nodes + state.u, state.v, dt)
        else:
            f_con, contacts = 0.0, []
        state = step_explicit(state, mass, f_ext, f_int, f_con, dt,
                              loads.constraints, damping, step_index=step)
        step += 1
        ke = kinetic_energy(mass, state.v)
        if on_step is not None:
            on_step(state, contacts)
        if se > 0.0 and ke > 0.0:
            ratio = ke / se
            if ratio < energy_ratio:
                return state
    raise ConvergenceError(energy_ratio=float(ratio), max_time=max_time)


def deformation_gradient(mesh, state, element_id, point=None):
    """F = I + grad0(u) for one element at one evaluation point.

    ``point`` may be an integration-point index (0-7 in the 2x2x2 rule), a
    natural-coordinate triple, or None for the element centroid.
    """
    element_id = int(element_id)
    if not 0 <= element_id < mesh.n_elements:
        raise ValueError("element id %d out of range" % element_id)
    if point is None:
        xi = np.zeros((1, 3))
    elif np.isscalar(point):
        xi = hexa.GAUSS_POINTS[int(point)][None, :]
    else:
        xi = np.asarray(point, dtype=float).reshape(1, 3)
    coords = mesh.nodes[mesh.elements[element_id]][None, :, :]
    grad0, _ = hexa.reference_operators(coords, xi)
    u_el = state.u[mesh.elements[element_id]]
    return np.eye(3) + np.einsum('ai,aj->ij', u_el, grad0[0, 0])


def principal_strains(F):
    """Green-Lagrange strain and its principal decomposition.

    E = (F^T F - I) / 2; the principal stretches are the square roots of
    the eigenvalues of F^T F (descending), the principal strains are
    stretch - 1, and the directions are the matching unit eigenvectors.
    """
    F = np.asarray(F, dtype=float).reshape(3, 3)
    J = float(_det33(F))
    if J <= 0.0:
        raise ElementInversionError(det=J)
    C = F.T @ F
    E = 0.5 * (C - np.eye(3))
    evals, evecs = np.linalg.eigh(C)
    order = np.argsort(evals)[::-1]
    stretches = np.sqrt(evals[order])
    directions = evecs[:, order].T
    e = stretches - 1.0
    return StrainResult(F=F, E_green=E, principal_stretches=stretches,
                        principal_directions=directions, e=e,
                        e_max=float(e.max()), e_min=float(e.min()))


def max_principal_strain_field(mesh, state):
    """Per-element maximum principal strain at the element centroids."""
    coords = mesh.element_coords()
    grad0, _ = hexa.reference_operators(coords, np.zeros((1, 3)))
    u_el = state.u[mesh.elements]
    F = np.eye(3) + np.einsum('eai,eqaj->eqij', u_el, grad0)
    J = _det33(F)
    _check_positive_j(J)
    C = np.swapaxes(F, -1, -2) @ F
    evals = np.linalg.eigvalsh(C)                           # ascending
    return np.sqrt(evals[:, 0, 2]) - 1.0
