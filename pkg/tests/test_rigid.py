import numpy as np
import pytest

from softgrasp.errors import ConfigurationError, RigidPenetrationError
from softgrasp.hands import (three_finger_cylinder_hand,
                             three_finger_sphere_hand)
from softgrasp.mesh import RigidSurface
from softgrasp.rigid import (CylinderObject, Gripper, GripperLink, Joint,
                             RigidContact, SphereObject, close_gripper,
                             closure_for_depth, find_contact_points,
                             forward_kinematics, grasp_equilibrium,
                             in_friction_cone, rigid_pull_test)
from softgrasp.transforms import Pose, rotation_about_axis


def flat_pad(half=0.01, thick=0.004):
    """Square pad whose pressing face is the local y = 0 plane (normal +y)."""
    return RigidSurface.box((half, 0.5 * thick, half),
                            center=(0.0, -0.5 * thick, 0.0))


def simple_chain():
    links = [
        GripperLink(name="palm", parent=None),
        GripperLink(name="a", parent="palm",
                    origin=Pose(np.eye(3), (0.1, 0.0, 0.0)),
                    joint=Joint("revolute", axis=(0, 0, 1), limits=(-3, 3))),
        GripperLink(name="b", parent="a",
                    origin=Pose(np.eye(3), (0.2, 0.0, 0.0)),
                    joint=Joint("revolute", axis=(1, 0, 0), limits=(-3, 3))),
    ]
    return Gripper(links=links)


# ---------------------------------------------------------------------------
# forward kinematics

def test_fk_zero_joints_compose_fixed_transforms():
    g = simple_chain()
    g.base_position = np.array([0.0, 0.0, 1.0])
    poses = forward_kinematics(g, [0.0, 0.0])
    assert np.allclose(poses["palm"].p, [0.0, 0.0, 1.0])
    assert np.allclose(poses["a"].p, [0.1, 0.0, 1.0])
    assert np.allclose(poses["b"].p, [0.3, 0.0, 1.0])
    for name in ("palm", "a", "b"):
        assert np.allclose(poses[name].R, np.eye(3))


def test_fk_single_revolute_90deg():
    g = simple_chain()
    poses = forward_kinematics(g, [np.pi / 2, 0.0])
    assert np.allclose(poses["a"].R, rotation_about_axis((0, 0, 1), np.pi / 2),
                       atol=1e-14)
    # child origin (0.2, 0, 0) in the rotated frame lands on +y
    assert np.allclose(poses["b"].p, [0.1, 0.2, 0.0], atol=1e-14)


def test_fk_matches_homogeneous_matrix_composition():
    # independent oracle: direct 4x4 matrix products
    def hom(R, p):
        T = np.eye(4)
        T[:3, :3] = R
        T[:3, 3] = p
        return T

    g = simple_chain()
    g.base_position = np.array([0.05, -0.02, 0.3])
    g.base_rotation = rotation_about_axis((1, 1, 0), 0.4)
    q = [0.7, -1.1]
    poses = forward_kinematics(g, q)

    T = hom(g.base_rotation, g.base_position)
    T = T @ hom(np.eye(3), (0.1, 0, 0)) @ hom(rotation_about_axis((0, 0, 1), q[0]), np.zeros(3))
    T = T @ hom(np.eye(3), (0.2, 0, 0)) @ hom(rotation_about_axis((1, 0, 0), q[1]), np.zeros(3))
    assert np.allclose(poses["b"].R, T[:3, :3], atol=1e-13)
    assert np.allclose(poses["b"].p, T[:3, 3], atol=1e-13)


def test_fk_rejects_out_of_limit_joint():
    g = simple_chain()
    with pytest.raises(ValueError):
        forward_kinematics(g, [5.0, 0.0])


def test_prismatic_joint_translates():
    links = [
        GripperLink(name="palm", parent=None),
        GripperLink(name="slider", parent="palm",
                    joint=Joint("prismatic", axis=(0, 1, 0), limits=(0, 0.5))),
    ]
    poses = forward_kinematics(Gripper(links=links), [0.2])
    assert np.allclose(poses["slider"].p, [0.0, 0.2, 0.0])


def test_cycle_detection():
    links = [
        GripperLink(name="a", parent="b"),
        GripperLink(name="b", parent="a"),
    ]
    with pytest.raises(ConfigurationError):
        Gripper(links=links)


# ---------------------------------------------------------------------------
# rigid contact points

def pad_gripper(pose):
    links = [GripperLink(name="palm", parent=None),
             GripperLink(name="pad_link", parent="palm", origin=pose,
                         pad=flat_pad())]
    return Gripper(links=links)


def test_pad_tangent_to_sphere():
    obj = SphereObject(center=(0, 0, 0), radius=0.05, mass=1.0)
    # pressing face y=0 local, placed at y = -0.05: face touches the sphere
    g = pad_gripper(Pose(np.eye(3), (0.0, -0.05, 0.0)))
    contacts = find_contact_points(g, [], obj)
    assert len(contacts) == 1
    c = contacts[0]
    assert np.allclose(c.position, [0.0, -0.05, 0.0], atol=1e-9)
    assert np.allclose(c.normal, [0.0, -1.0, 0.0], atol=1e-9)
    assert c.link == "pad_link"


def test_pad_one_mm_away_no_contact():
    obj = SphereObject(center=(0, 0, 0), radius=0.05, mass=1.0)
    g = pad_gripper(Pose(np.eye(3), (0.0, -0.051, 0.0)))
    assert find_contact_points(g, [], obj) == []


def test_deep_penetration_rejected():
    obj = SphereObject(center=(0, 0, 0), radius=0.05, mass=1.0)
    g = pad_gripper(Pose(np.eye(3), (0.0, -0.0495, 0.0)))
    with pytest.raises(RigidPenetrationError):
        find_contact_points(g, [], obj)


def test_pad_parallel_to_cylinder_generator_line():
    obj = CylinderObject(base=(0, 0, 0), axis=(0, 0, 1), length=0.3,
                         radius=0.05, mass=1.0)
    g = pad_gripper(Pose(np.eye(3), (0.0, -0.05, 0.15)))
    c1 = find_contact_points(g, [], obj)
    c2 = find_contact_points(g, [], obj)
    assert len(c1) == 1
    # tie along the touching line resolves deterministically
    assert np.allclose(c1[0].position, c2[0].position)
    assert np.allclose(c1[0].normal, [0.0, -1.0, 0.0], atol=1e-9)
    assert abs(c1[0].position[1] + 0.05) < 1e-9


# ---------------------------------------------------------------------------
# grasp equilibrium

def antipodal_contacts(radius=0.05):
    left = RigidContact(position=np.array([-radius, 0.0, 0.0]),
                        r=np.array([-radius, 0.0, 0.0]),
                        normal=np.array([-1.0, 0.0, 0.0]))
    right = RigidContact(position=np.array([radius, 0.0, 0.0]),
                         r=np.array([radius, 0.0, 0.0]),
                         normal=np.array([1.0, 0.0, 0.0]))
    return [left, right]


def test_antipodal_feasibility_threshold():
    # hand oracle: squeeze s holds m g iff mu s >= m g / 2, so s* = 9.81 N
    mu, m = 0.5, 1.0
    s_star = m * 9.81 / (2 * mu)
    lo = grasp_equilibrium(antipodal_contacts(), mu, m, squeeze=0.98 * s_star)
    hi = grasp_equilibrium(antipodal_contacts(), mu, m, squeeze=1.02 * s_star)
    assert not lo["feasible"]
    assert hi["feasible"]
    assert hi["residual_force"] < 1e-6
    assert hi["residual_moment"] < 1e-6


def test_zero_friction_orthogonal_gravity_infeasible():
    sol = grasp_equilibrium(antipodal_contacts(), mu=0.0, mass=1.0,
                            squeeze=100.0)
    assert not sol["feasible"]


def test_three_symmetric_contacts_zero_gravity():
    cs = []
    for phi in (0.0, 2 * np.pi / 3, 4 * np.pi / 3):
        n = np.array([np.cos(phi), np.sin(phi), 0.0])
        cs.append(RigidContact(position=0.05 * n, r=0.05 * n, normal=n))
    sol = grasp_equilibrium(cs, mu=0.5, mass=1.0, gravity=(0, 0, 0))
    assert sol["feasible"]
    assert np.allclose(sol["forces"], 0.0, atol=1e-9)


def test_no_contacts_with_gravity_infeasible_not_error():
    sol = grasp_equilibrium([], mu=0.5, mass=1.0)
    assert not sol["feasible"]
    assert sol["residual_force"] == pytest.approx(9.81)


def test_solved_forces_inside_exact_cone():
    mu, m = 0.5, 1.0
    cs = antipodal_contacts()
    sol = grasp_equilibrium(cs, mu, m, squeeze=15.0)
    assert sol["feasible"]
    for c in cs:
        assert in_friction_cone(c.force, c.pressing_direction, mu)
        # angle test agrees with the membership test
        ft = c.force - (c.force @ c.pressing_direction) * c.pressing_direction
        fn = c.force @ c.pressing_direction
        assert np.linalg.norm(ft) <= mu * fn + 1e-9


def test_equilibrium_frame_independence():
    mu, m = 0.5, 1.0
    R = rotation_about_axis((0.3, 1.0, -0.2), 1.15)
    cs = antipodal_contacts()
    sol = grasp_equilibrium(cs, mu, m, gravity=(0, 0, -9.81), squeeze=15.0)

    rot = []
    for c in antipodal_contacts():
        rot.append(RigidContact(position=R @ c.position, r=R @ c.r,
                                normal=R @ c.normal))
    sol_r = grasp_equilibrium(rot, mu, m, gravity=R @ np.array([0, 0, -9.81]),
                              squeeze=15.0)
    assert sol["feasible"] and sol_r["feasible"]
    for c, cr in zip(cs, rot):
        assert np.linalg.norm(R @ c.force - cr.force) \
            <= 1e-9 * max(np.linalg.norm(c.force), 1.0)


def test_alpha_monotone_in_mu():
    angles = [np.arctan(mu) for mu in (0.0, 0.2, 0.5, 1.0, 2.0)]
    assert all(a2 > a1 for a1, a2 in zip(angles, angles[1:]))


# ---------------------------------------------------------------------------
# gripper closure

@pytest.fixture(scope="module")
def cylinder_setup():
    obj = CylinderObject(base=(0, 0, 0), axis=(0, 0, 1), length=0.3,
                         radius=0.05, mass=2.36)
    hand = three_finger_cylinder_hand(0.05, grasp_center=(0, 0, 0.15))
    return obj, hand


def test_close_gripper_13_levels_monotone_thumb(cylinder_setup):
    obj, hand = cylinder_setup
    levels = np.linspace(0.0, 40.0, 13)
    states = close_gripper(hand, obj, levels, mu=0.4, gravity=(0, 0, 0))
    assert len(states) == 13
    thumb = [s.thumb_normal_force for s in states]
    assert all(b >= a - 1e-9 for a, b in zip(thumb, thumb[1:]))
    assert all(s.feasible for s in states)
    assert all(s.residual_force < 1e-6 and s.residual_moment < 1e-6
               for s in states)


def test_close_gripper_zero_actuation_touch(cylinder_setup):
    obj, hand = cylinder_setup
    (state,) = close_gripper(hand, obj, [0.0], mu=0.4, gravity=(0, 0, 0))
    assert state.feasible
    assert state.total_normal_force == pytest.approx(0.0, abs=1e-9)
    assert all(abs(c.gap) < 1e-6 for c in state.contacts)


def test_close_gripper_rejects_decreasing_levels(cylinder_setup):
    obj, hand = cylinder_setup
    with pytest.raises(ValueError):
        close_gripper(hand, obj, [5.0, 1.0], mu=0.4)


def test_close_gripper_unreachable_object():
    obj = SphereObject(center=(10.0, 0.0, 0.0), radius=0.05, mass=1.0)
    hand = three_finger_sphere_hand(0.05)
    with pytest.raises(ConfigurationError):
        close_gripper(hand, obj, [1.0], mu=0.4)


def test_symmetric_sphere_squeeze_equal_forces():
    obj = SphereObject(center=(0, 0, 0), radius=0.05, mass=1.0)
    hand = three_finger_sphere_hand(0.05)
    (state,) = close_gripper(hand, obj, [45.0], mu=0.5, gravity=(0, 0, -9.81))
    per_finger = {}
    for c in state.contacts:
        per_finger[c.link] = per_finger.get(c.link, 0.0) + c.normal_force
    forces = list(per_finger.values())
    assert len(forces) == 3
    assert max(forces) - min(forces) < 1e-6
    assert state.feasible


def test_closure_for_depth_reaches_target(cylinder_setup):
    # oracle: dense barycentric sampling of the pad surfaces against the
    # analytic cylinder distance
    obj, hand = cylinder_setup
    depth = 0.006
    q = closure_for_depth(hand, obj, depth)
    poses = forward_kinematics(hand, q)
    grid = np.linspace(0.0, 1.0, 25)
    deepest = np.inf
    for name in hand.pad_links():
        pad = hand.link(name).pad
        verts = poses[name].apply(pad.vertices)
        for tri in pad.triangles:
            a, b, c = verts[tri]
            for s in grid:
                pts = a + np.outer(grid * (1 - s), b - a) + s * (c - a)
                sd, _, _ = obj.closest_to_surface(pts)
                deepest = min(deepest, sd.min())
    assert deepest == pytest.approx(-depth, abs=2e-5)


# ---------------------------------------------------------------------------
# pull resistance

def pinch_state(total_fn, n_pairs=2, mu_used=0.25, spacing=0.02):
    """Antipodal pinch pairs along +/-y with normals orthogonal to z."""
    contacts = []
    per = total_fn / (2 * n_pairs)
    for k in range(n_pairs):
        z = (k - (n_pairs - 1) / 2) * spacing
        for sy in (-1.0, 1.0):
            n = np.array([0.0, sy, 0.0])
            c = RigidContact(position=np.array([0.0, 0.05 * sy, z]),
                             r=np.array([0.0, 0.05 * sy, z]), normal=n)
            c.force = per * c.pressing_direction
            contacts.append(c)
    from softgrasp.rigid import GraspState
    return GraspState(q=np.zeros(0), contacts=contacts, actuation=total_fn,
                      feasible=True)


def test_pull_bound_coulomb_sum():
    state = pinch_state(total_fn=40.0)
    bound = rigid_pull_test(state, (0.0, 0.0, 1.0), mu=0.25)
    assert bound == pytest.approx(10.0, rel=1e-9)


def test_pull_bound_zero_friction():
    state = pinch_state(total_fn=40.0)
    assert rigid_pull_test(state, (0.0, 0.0, 1.0), mu=0.0) \
        == pytest.approx(0.0, abs=1e-9)


def test_pull_bound_homogeneous_in_normal_scale():
    b1 = rigid_pull_test(pinch_state(20.0), (0, 0, 1), mu=0.3)
    b2 = rigid_pull_test(pinch_state(40.0), (0, 0, 1), mu=0.3)
    assert b2 == pytest.approx(2.0 * b1, rel=1e-9)


def test_pull_bound_from_closed_gripper(cylinder_setup):
    obj, hand = cylinder_setup
    states = close_gripper(hand, obj, [10.0, 20.0], mu=0.4, gravity=(0, 0, 0))
    for s in states:
        bound = rigid_pull_test(s, (0, 0, 1), mu=0.4)
        assert bound == pytest.approx(0.4 * s.total_normal_force, rel=1e-6)
