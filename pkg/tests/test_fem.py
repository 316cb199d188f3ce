import numpy as np
import pytest

from softgrasp.errors import (ConfigurationError, ConvergenceError,
                              DivergenceError, ElementInversionError)
from softgrasp.fem import (Constraint, LoadCase, Material, SimState,
                           deformation_gradient, driver_timestep,
                           external_forces, internal_forces,
                           internal_forces_and_energy, kinetic_energy,
                           lumped_mass, run_to_quasistatic, stable_timestep,
                           step_explicit, strain_energy, stress)
from softgrasp.mesh import Mesh, generate_box_mesh
from softgrasp.transforms import rotation_about_axis

RHO = 1000.0


def unit_cube(material_id=0):
    return generate_box_mesh((1.0, 1.0, 1.0), (1, 1, 1), material_id)


def distorted_single_hex(seed=3, scale=0.15):
    """One hexahedron with randomly perturbed corners (still valid)."""
    m = unit_cube()
    rng = np.random.default_rng(seed)
    nodes = m.nodes + scale * rng.uniform(-1, 1, m.nodes.shape)
    return Mesh(nodes, m.elements, m.element_material)


# ---------------------------------------------------------------------------
# material

def test_material_validation():
    Material(density=1000.0)
    with pytest.raises(ValueError):
        Material(density=-1.0)
    with pytest.raises(ValueError):
        Material(density=1.0, poisson_ratio=0.5)
    with pytest.raises(ValueError):
        Material(density=1.0, young_modulus=0.0)
    with pytest.raises(ValueError):
        Material(density=1.0, friction=-0.1)
    with pytest.raises(ValueError):
        Material(density=1.0, model="ogden")


# ---------------------------------------------------------------------------
# lumped mass

def test_unit_cube_lumped_mass():
    m = unit_cube()
    mass = lumped_mass(m, Material(density=RHO))
    assert np.allclose(mass, 125.0, rtol=1e-13)


def test_stacked_cubes_shared_nodes():
    m = generate_box_mesh((1.0, 1.0, 2.0), (1, 1, 2))
    mass = lumped_mass(m, Material(density=RHO))
    mid = np.isclose(m.nodes[:, 2], 1.0)
    assert np.allclose(mass[mid], 250.0, rtol=1e-13)
    assert np.allclose(mass[~mid], 125.0, rtol=1e-13)


def test_mass_conservation_distorted():
    m = distorted_single_hex()
    mass = lumped_mass(m, Material(density=RHO))
    from softgrasp.hexahedron import element_volumes
    total = RHO * element_volumes(m.element_coords()).sum()
    assert mass.sum() == pytest.approx(total, rel=1e-12)
    assert np.all(mass > 0.0)


def test_missing_material_id():
    m = unit_cube(material_id=3)
    with pytest.raises(ConfigurationError):
        lumped_mass(m, {0: Material(density=RHO)})


# ---------------------------------------------------------------------------
# stress

def test_stress_zero_at_identity():
    for model in ("linear-elastic", "neo-hookean"):
        mat = Material(density=RHO, model=model, young_modulus=1e6,
                       poisson_ratio=0.3)
        s = stress(np.eye(3), mat)
        assert np.allclose(s, 0.0, atol=1e-12)


def test_neo_hookean_matches_linear_closed_form():
    # laterally constrained uniaxial stretch: s11 = E eps (1-nu)/((1+nu)(1-2nu))
    E, nu, eps = 1e6, 0.3, 1e-4
    mat = Material(density=RHO, model="neo-hookean", young_modulus=E,
                   poisson_ratio=nu)
    F = np.diag([1.0 + eps, 1.0, 1.0])
    s = stress(F, mat)
    s11 = E * eps * (1 - nu) / ((1 + nu) * (1 - 2 * nu))
    assert s[0, 0] == pytest.approx(s11, rel=0.01)


def test_neo_hookean_objectivity_under_rotation():
    mat = Material(density=RHO, model="neo-hookean", young_modulus=1e6,
                   poisson_ratio=0.3)
    R = rotation_about_axis([1.0, 2.0, -0.5], 1.1)
    assert np.allclose(stress(R, mat), 0.0, atol=1e-9)


def test_stress_symmetric_and_inversion_error():
    mat = Material(density=RHO, model="neo-hookean", young_modulus=1e6,
                   poisson_ratio=0.3)
    rng = np.random.default_rng(0)
    F = np.eye(3) + 0.2 * rng.uniform(-1, 1, (3, 3))
    assert np.linalg.det(F) > 0
    s = stress(F, mat)
    assert np.allclose(s, s.T, atol=1e-9 * np.abs(s).max())
    with pytest.raises(ElementInversionError):
        stress(np.diag([-1.0, 1.0, 1.0]), mat)


# ---------------------------------------------------------------------------
# internal forces

def test_internal_forces_zero_at_rest():
    m = unit_cube()
    f = internal_forces(m, SimState.zero(m.n_nodes),
                        Material(density=RHO, model="neo-hookean"))
    assert np.allclose(f, 0.0, atol=1e-12)


def test_internal_forces_self_equilibrium():
    m = distorted_single_hex()
    rng = np.random.default_rng(5)
    state = SimState.zero(m.n_nodes)
    state.u = 0.05 * rng.uniform(-1, 1, state.u.shape)
    for model in ("linear-elastic", "neo-hookean"):
        f = internal_forces(m, state, Material(density=RHO, model=model,
                                               young_modulus=1e6,
                                               poisson_ratio=0.3))
        assert np.linalg.norm(f.sum(axis=0)) <= 1e-9 * np.abs(f).max()


@pytest.mark.parametrize("model", ["linear-elastic", "neo-hookean"])
def test_internal_forces_match_energy_gradient(model):
    # independent oracle: central finite differences of the strain energy
    m = distorted_single_hex(seed=11)
    mat = Material(density=RHO, model=model, young_modulus=1e6,
                   poisson_ratio=0.3)
    rng = np.random.default_rng(4)
    state = SimState.zero(m.n_nodes)
    state.u = 0.03 * rng.uniform(-1, 1, state.u.shape)
    f = internal_forces(m, state, mat)

    h = 1e-6
    grad = np.zeros_like(f)
    for node in range(m.n_nodes):
        for k in range(3):
            up = state.copy()
            up.u[node, k] += h
            dn = state.copy()
            dn.u[node, k] -= h
            grad[node, k] = (strain_energy(m, up, mat)
                             - strain_energy(m, dn, mat)) / (2 * h)
    assert np.linalg.norm(f - grad) / np.linalg.norm(grad) < 1e-4


def test_internal_forces_inversion_error_names_element():
    m = generate_box_mesh((1.0, 1.0, 2.0), (1, 1, 2))
    state = SimState.zero(m.n_nodes)
    # collapse the top element through itself
    top = np.isclose(m.nodes[:, 2], 2.0)
    state.u[top, 2] = -1.5
    with pytest.raises(ElementInversionError) as exc:
        internal_forces(m, state, Material(density=RHO, model="neo-hookean"))
    assert exc.value.element_id == 1


# ---------------------------------------------------------------------------
# external forces

def test_gravity_sums_to_total_weight():
    m = unit_cube()
    mat = Material(density=RHO)
    f = external_forces(m, mat, (0.0, 0.0, -9.81))
    assert np.allclose(f.sum(axis=0), [0.0, 0.0, -9810.0], atol=1e-9)


def test_uniform_traction_on_face():
    m = unit_cube()
    mat = Material(density=RHO)
    top = m.boundary_faces()
    top = top[np.all(np.isclose(m.nodes[top][:, :, 2], 1.0), axis=1)]
    p = 500.0
    f = external_forces(m, mat, (0, 0, 0), [(top, (0.0, 0.0, -p))])
    assert np.allclose(f.sum(axis=0), [0.0, 0.0, -p], rtol=1e-12)


def test_interior_facet_rejected():
    m = generate_box_mesh((1.0, 1.0, 2.0), (1, 1, 2))
    mat = Material(density=RHO)
    shared = np.flatnonzero(np.isclose(m.nodes[:, 2], 1.0))
    with pytest.raises(ValueError):
        external_forces(m, mat, (0, 0, 0), [(shared[None, :], (0, 0, 1.0))])


def test_no_loads_zero():
    m = unit_cube()
    f = external_forces(m, Material(density=RHO), (0, 0, 0))
    assert np.all(f == 0.0)


# ---------------------------------------------------------------------------
# stable timestep

def test_timestep_closed_form():
    m = generate_box_mesh((0.1, 0.1, 0.1), (1, 1, 1))
    mat = Material(density=1000.0, young_modulus=1e6, poisson_ratio=0.0)
    assert mat.dilatational_wave_speed == pytest.approx(31.6228, rel=1e-4)
    dt = stable_timestep(m, mat, safety=0.9)
    assert dt == pytest.approx(2.8460e-3, rel=1e-4)


def test_timestep_scales_with_element_size():
    mat = Material(density=1000.0, young_modulus=1e6, poisson_ratio=0.0)
    d1 = stable_timestep(generate_box_mesh((0.1,) * 3, (1, 1, 1)), mat)
    d2 = stable_timestep(generate_box_mesh((0.05,) * 3, (1, 1, 1)), mat)
    assert d2 == pytest.approx(0.5 * d1, rel=1e-12)


def test_timestep_poisson_ratio_factor():
    m = generate_box_mesh((0.1,) * 3, (1, 1, 1))
    d0 = stable_timestep(m, Material(density=1000.0, young_modulus=1e6,
                                     poisson_ratio=0.0))
    d3 = stable_timestep(m, Material(density=1000.0, young_modulus=1e6,
                                     poisson_ratio=0.3))
    assert d3 / d0 == pytest.approx(np.sqrt(1.3 * 0.4 / 0.7), rel=1e-6)
    assert d3 / d0 == pytest.approx(0.8619, rel=1e-4)


def test_timestep_safety_validated():
    m = unit_cube()
    with pytest.raises(ValueError):
        stable_timestep(m, Material(density=RHO), safety=1.5)


# ---------------------------------------------------------------------------
# explicit stepping

def test_free_flight():
    m = unit_cube()
    mass = lumped_mass(m, Material(density=RHO))
    state = SimState.zero(m.n_nodes)
    state.v[:] = [0.1, -0.2, 0.05]
    zeros = np.zeros_like(state.u)
    new = step_explicit(state, mass, zeros, zeros, zeros, 1e-3)
    assert np.allclose(new.u, 1e-3 * state.v, rtol=1e-14)
    assert np.allclose(new.v, state.v)


def test_constant_force_velocity():
    mass = np.array([1.0])
    state = SimState.zero(1)
    f = np.array([[0.0, 0.0, -9.81]])
    zeros = np.zeros((1, 3))
    dt, T = 1e-3, 0.5
    for i in range(int(T / dt)):
        state = step_explicit(state, mass, f, zeros, zeros, dt)
    assert state.v[0, 2] == pytest.approx(-9.81 * T, rel=2 * dt / T)


def test_divergence_detected():
    mass = np.array([1.0])
    state = SimState.zero(1)
    f = np.array([[np.inf, 0.0, 0.0]])
    zeros = np.zeros((1, 3))
    with pytest.raises(DivergenceError):
        step_explicit(state, mass, f, zeros, zeros, 1e-3, step_index=17)


def test_constraint_overwrites_dofs():
    m = unit_cube()
    mass = lumped_mass(m, Material(density=RHO))
    base = np.flatnonzero(np.isclose(m.nodes[:, 2], 0.0))
    c = Constraint(base, displacement=(0.0, 0.0, 0.0))
    state = SimState.zero(m.n_nodes)
    f = np.zeros_like(state.u)
    f[:, 2] = -1.0
    new = step_explicit(state, mass, f, np.zeros_like(f), np.zeros_like(f),
                        1e-3, [c])
    assert np.all(new.u[base] == 0.0)
    assert np.all(new.v[base] == 0.0)
    free = np.setdiff1d(np.arange(m.n_nodes), base)
    assert np.all(new.u[free][:, 2] < 0.0)


def test_energy_drift_undamped_bar():
    # discrete conserved energy: 0.5 m v(-) . v(+) + strain energy(u)
    m = generate_box_mesh((0.1, 0.1, 0.1), (1, 1, 1))
    mat = Material(density=1000.0, model="linear-elastic",
                   young_modulus=1e6, poisson_ratio=0.0)
    mass = lumped_mass(m, mat)
    state = SimState.zero(m.n_nodes)
    state.u[:, 2] = -1e-4 * m.nodes[:, 2]   # small axial compression
    dt = stable_timestep(m, mat, safety=0.9)
    zeros = np.zeros_like(state.u)

    e0 = strain_energy(m, state, mat)
    drift = 0.0
    for i in range(1000):
        f_int, se = internal_forces_and_energy(m, state, mat)
        new = step_explicit(state, mass, zeros, f_int, zeros, dt)
        cross = 0.5 * np.sum(mass * np.einsum('ij,ij->i', state.v, new.v))
        drift = max(drift, abs(cross + se - e0))
        state = new
    assert drift < 0.01 * e0


def test_linear_momentum_conserved_free_body():
    m = generate_box_mesh((0.1, 0.1, 0.1), (2, 2, 2))
    mat = Material(density=1000.0, model="neo-hookean",
                   young_modulus=1e5, poisson_ratio=0.3)
    mass = lumped_mass(m, mat)
    rng = np.random.default_rng(2)
    state = SimState.zero(m.n_nodes)
    state.u = 1e-3 * rng.uniform(-1, 1, state.u.shape)
    state.v = 0.01 * rng.uniform(-1, 1, state.v.shape) + [0.1, 0.0, -0.05]
    p0 = (mass[:, None] * state.v).sum(axis=0)
    dt = driver_timestep(m, mat, safety=0.9)
    zeros = np.zeros_like(state.u)
    for i in range(1000):
        f_int = internal_forces(m, state, mat)
        state = step_explicit(state, mass, zeros, f_int, zeros, dt)
    p1 = (mass[:, None] * state.v).sum(axis=0)
    assert np.linalg.norm(p1 - p0) <= 1e-9 * np.linalg.norm(p0)


# ---------------------------------------------------------------------------
# dynamic relaxation

def test_quasistatic_no_loads_returns_immediately():
    m = unit_cube()
    mat = Material(density=RHO, rayleigh_mass_damping=10.0)
    state = run_to_quasistatic(m, mat, LoadCase(), max_time=1.0)
    assert state.t == 0.0
    assert np.all(state.u == 0.0)


def test_quasistatic_self_weight_settlement():
    # closed-form oracle: column of height L compresses rho g L^2 / (2 E)
    L, E = 0.1, 1e5
    m = generate_box_mesh((0.05, 0.05, L), (1, 1, 4))
    mat = Material(density=1000.0, model="linear-elastic", young_modulus=E,
                   poisson_ratio=0.0, rayleigh_mass_damping=250.0)
    base = np.flatnonzero(np.isclose(m.nodes[:, 2], 0.0))
    loads = LoadCase(gravity=(0.0, 0.0, -9.81),
                     constraints=[Constraint(base, (0.0, 0.0, 0.0))])
    state = run_to_quasistatic(m, mat, loads, max_time=2.0)
    top = np.isclose(m.nodes[:, 2], L)
    settlement = -state.u[top, 2].mean()
    exact = 1000.0 * 9.81 * L**2 / (2 * E)
    assert settlement == pytest.approx(exact, rel=0.10)


def test_quasistatic_undamped_never_converges():
    m = generate_box_mesh((0.1, 0.1, 0.1), (1, 1, 1))
    mat = Material(density=1000.0, young_modulus=1e6, poisson_ratio=0.0,
                   rayleigh_mass_damping=0.0)
    base = np.flatnonzero(np.isclose(m.nodes[:, 2], 0.0))
    loads = LoadCase(gravity=(0.0, 0.0, -9.81),
                     constraints=[Constraint(base, (0.0, 0.0, 0.0))])
    with pytest.raises(ConvergenceError) as exc:
        run_to_quasistatic(m, mat, loads, max_time=0.2)
    assert exc.value.energy_ratio > 1e-4


# ---------------------------------------------------------------------------
# deformation gradient

def test_deformation_gradient_identity():
    m = unit_cube()
    F = deformation_gradient(m, SimState.zero(m.n_nodes), 0, 0)
    assert np.allclose(F, np.eye(3), atol=1e-14)


def test_deformation_gradient_uniaxial():
    m = unit_cube()
    state = SimState.zero(m.n_nodes)
    state.u[:, 0] = 0.1 * m.nodes[:, 0]
    for q in range(8):
        F = deformation_gradient(m, state, 0, q)
        assert np.allclose(F, np.diag([1.1, 1.0, 1.0]), atol=1e-13)


def test_deformation_gradient_rigid_rotation():
    m = unit_cube()
    R = rotation_about_axis([0.0, 0.0, 1.0], np.pi / 2)
    state = SimState.zero(m.n_nodes)
    state.u = m.nodes @ R.T - m.nodes
    F = deformation_gradient(m, state, 0, (0.3, -0.2, 0.6))
    assert np.allclose(F, R, atol=1e-12)


def test_patch_test_affine_field_on_distorted_hex():
    m = distorted_single_hex(seed=9)
    rng = np.random.default_rng(1)
    A = 0.1 * rng.uniform(-1, 1, (3, 3))
    b = rng.uniform(-1, 1, 3)
    state = SimState.zero(m.n_nodes)
    state.u = m.nodes @ A.T + b
    for q in range(8):
        F = deformation_gradient(m, state, 0, q)
        assert np.abs(F - (np.eye(3) + A)).max() < 1e-12


def test_deformation_gradient_bad_element():
    m = unit_cube()
    with pytest.raises(ValueError):
        deformation_gradient(m, SimState.zero(m.n_nodes), 5, 0)
