import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from markersolve.errors import ContractError, DegenerateGeometryError
from markersolve.kinematics import (MarkerLayout, Motion, MotionFrame, Skeleton, forward_kinematics,
                                geodesic_angle, kabsch_rotation, swing_from_vectors,
                                swing_twist_decompose)
from markersolve.rotation import axis_angle_matrix, is_rotation, perpendicular_axis

from conftest import random_rotations
from oracles import (axis_angle_from_matrix, fk_oracle, quat_axis_angle, quat_rotate,
                     quat_to_matrix, random_quat, shortest_arc)


def rz(deg):
    return axis_angle_matrix(np.array([0.0, 0.0, 1.0]), np.deg2rad(deg))


def chain(n=2):
    return Skeleton([f"j{i}" for i in range(n)], [-1] + list(range(n - 1)),
                    [[0, 0, 0]] + [[0, 1, 0]] * (n - 1))


# forward kinematics

def test_fk_identity_chain(backend):
    pos, _ = forward_kinematics(chain(), MotionFrame(np.zeros(3), np.stack([np.eye(3)] * 2)))
    np.testing.assert_allclose(pos[1], [0, 1, 0])


def test_fk_root_quarter_turn(backend):
    pos, _ = forward_kinematics(chain(), MotionFrame(np.zeros(3), np.stack([rz(90), np.eye(3)])))
    np.testing.assert_allclose(pos[1], [-1, 0, 0], atol=1e-15)


def test_fk_matches_composition_oracle(backend, rng):
    for _ in range(20):
        sk = Skeleton(["a", "b", "c"], [-1, 0, 1], rng.normal(size=(3, 3)))
        rots = random_rotations(rng, 3)
        tr = rng.normal(size=3)
        pos, glob = forward_kinematics(sk, MotionFrame(tr, rots))
        p2, g2 = fk_oracle(sk.parents, sk.offsets, tr, rots)
        np.testing.assert_allclose(pos, p2, atol=1e-12)
        np.testing.assert_allclose(glob, g2, atol=1e-12)


def test_fk_branching_tree_oracle(backend, rng):
    parents = [-1, 0, 1, 1, 0, 4, 2]
    sk = Skeleton([str(i) for i in range(7)], parents, rng.normal(size=(7, 3)))
    rots = random_rotations(rng, 7)
    pos, _ = forward_kinematics(sk, MotionFrame(np.zeros(3), rots))
    np.testing.assert_allclose(pos, fk_oracle(parents, sk.offsets, np.zeros(3), rots)[0], atol=1e-12)


def test_fk_deterministic(rng):
    sk = chain(5)
    fr = MotionFrame(rng.normal(size=3), random_rotations(rng, 5))
    a = forward_kinematics(sk, fr)[0]
    b = forward_kinematics(sk, fr)[0]
    assert a.tobytes() == b.tobytes()


def test_fk_root_equivariance(rng):
    sk = Skeleton([str(i) for i in range(5)], [-1, 0, 1, 0, 3], rng.normal(size=(5, 3)))
    rots = random_rotations(rng, 5)
    q = random_rotations(rng, 1)[0]
    tr = rng.normal(size=3)
    pos, _ = forward_kinematics(sk, MotionFrame(tr, rots))
    rots2 = rots.copy()
    rots2[0] = q @ rots[0]
    pos2, _ = forward_kinematics(sk, MotionFrame(tr, rots2))
    np.testing.assert_allclose(pos2 - tr, (pos - tr) @ q.T, atol=1e-12)


def test_fk_rejects_wrong_count():
    with pytest.raises(ContractError):
        forward_kinematics(chain(), MotionFrame(np.zeros(3), np.stack([np.eye(3)] * 3)))


# validation of the core types

@pytest.mark.parametrize("parents", [[0, 0], [-1, 1], [-1, 2, 0]])
def test_skeleton_rejects_bad_topology(parents):
    with pytest.raises(ContractError):
        Skeleton([str(i) for i in range(len(parents))], parents, np.zeros((len(parents), 3)))


def test_layout_rejects_null_and_duplicates():
    with pytest.raises(ContractError):
        MarkerLayout(("a", "null"), [0, 0], np.zeros((2, 3)), ("body", "body"))
    with pytest.raises(ContractError):
        MarkerLayout(("a", "a"), [0, 0], np.zeros((2, 3)), ("body", "body"))
    lay = MarkerLayout(("a",), [3], np.zeros((1, 3)), ("body",))
    with pytest.raises(ContractError):
        lay.validate_for(chain())


def test_motion_rejects_non_rotation():
    bad = np.stack([np.eye(3)] * 2)[None].copy()
    bad[0, 1, 0, 0] = 1.01
    with pytest.raises(ContractError):
        Motion(60.0, np.zeros((1, 3)), bad)


def test_leaves_are_childless_non_root():
    sk = Skeleton(["r", "a", "b", "c"], [-1, 0, 1, 0], np.ones((4, 3)))
    assert list(sk.leaves) == [2, 3]
    assert list(sk.primary_child) == [1, 2, -1, -1]
    assert list(Skeleton(["r"], [-1], np.zeros((1, 3))).leaves) == []


# swing

def test_swing_aligned_is_identity():
    np.testing.assert_allclose(swing_from_vectors([0, 1, 0], [0, 1, 0]), np.eye(3))


def test_swing_quarter_turn_about_z():
    r = swing_from_vectors([0, 1, 0], [1, 0, 0])
    np.testing.assert_allclose(r, [[0, -1, 0], [1, 0, 0], [0, 0, 1]], atol=1e-15)


def test_swing_matches_shortest_arc_quaternion(rng):
    for _ in range(200):
        j, t = rng.normal(size=(2, 3))
        r = swing_from_vectors(j, t)
        q = shortest_arc(t, j)
        np.testing.assert_allclose(r, quat_to_matrix(q), atol=1e-9)
        np.testing.assert_allclose(r @ (t / np.linalg.norm(t)), j / np.linalg.norm(j), atol=1e-9)


def test_swing_antiparallel_fallback_is_deterministic():
    t = np.array([0.0, 2.0, 0.0])
    r1 = swing_from_vectors(-t, t)
    r2 = swing_from_vectors(-t, t)
    assert r1.tobytes() == r2.tobytes()
    np.testing.assert_allclose(r1 @ [0, 1, 0], [0, -1, 0], atol=1e-15)
    # half turn about the perpendicular axis of (0, 1, 0), which is +z
    np.testing.assert_allclose(r1, np.diag([-1.0, -1.0, 1.0]), atol=1e-15)
    assert is_rotation(r1, 1e-12)


def test_swing_nearly_antiparallel_stays_accurate():
    t = np.array([0.0, 1.0, 0.0])
    j = np.array([1e-9, -1.0, 0.0])
    r = swing_from_vectors(j, t)
    np.testing.assert_allclose(r @ t, j / np.linalg.norm(j), atol=1e-9)


@pytest.mark.parametrize("est,tmpl", [([0, 0, 0], [0, 1, 0]), ([1, 0, 0], [0, 0, 0])])
def test_swing_zero_vector_raises(est, tmpl):
    with pytest.raises(DegenerateGeometryError, match="degenerate bone"):
        swing_from_vectors(est, tmpl)


def test_perpendicular_axis_first_nonzero_rule():
    np.testing.assert_allclose(perpendicular_axis([0, 0, 3.0]), [1, 0, 0])
    np.testing.assert_allclose(perpendicular_axis([2.0, 0, 0]), [0, 1, 0])


unit3 = arrays(np.float64, 3, elements=st.floats(-1, 1)).filter(lambda v: np.linalg.norm(v) > 1e-3)


@settings(max_examples=300, deadline=None)
@given(unit3, unit3)
def test_swing_is_proper_rotation(j, t):
    r = swing_from_vectors(j, t)
    np.testing.assert_allclose(r.T @ r, np.eye(3), atol=1e-12)
    assert abs(np.linalg.det(r) - 1.0) < 1e-12


# swing-twist decomposition

def test_decompose_pure_twist():
    st_ = swing_twist_decompose(axis_angle_matrix(np.array([0, 1.0, 0]), np.deg2rad(30)), [0, 1, 0])
    np.testing.assert_allclose(st_.swing, np.eye(3), atol=1e-15)
    assert st_.twist_angle == pytest.approx(np.deg2rad(30), abs=1e-15)


def test_decompose_pure_swing():
    r = rz(45)
    st_ = swing_twist_decompose(r, [0, 1, 0])
    assert st_.twist_angle == pytest.approx(0.0, abs=1e-15)
    np.testing.assert_allclose(st_.swing, r, atol=1e-15)


def test_decompose_singular_half_swing():
    r = rz(180) @ axis_angle_matrix(np.array([0, 1.0, 0]), 0.3)
    st_ = swing_twist_decompose(r, [0, 1, 0])
    assert st_.singular and st_.twist_angle == 0.0
    np.testing.assert_allclose(st_.compose(), r, atol=1e-12)


def test_decompose_roundtrip_and_structure(rng):
    for _ in range(200):
        q = random_quat(rng)
        r = quat_to_matrix(q)
        a = rng.normal(size=3)
        st_ = swing_twist_decompose(r, a)
        a = a / np.linalg.norm(a)
        np.testing.assert_allclose(st_.compose(), r, atol=1e-9)
        # swing has no component about the axis, and its axis is perpendicular to it
        assert swing_twist_decompose(st_.swing, a).twist_angle == pytest.approx(0.0, abs=1e-9)
        ax, ang = axis_angle_from_matrix(st_.swing)
        if abs(ang) > 1e-6:
            assert abs(ax @ a) < 1e-6
        assert -np.pi < st_.twist_angle <= np.pi


def test_twist_matches_quaternion_projection(rng):
    # twist angle = 2 atan2(q_vec . a, q_w) wrapped, for the swing-twist split of q
    for _ in range(100):
        q = random_quat(rng)
        a = rng.normal(size=3)
        a /= np.linalg.norm(a)
        ang = 2 * math.atan2(q[1:] @ a, q[0])
        ang = (ang + np.pi) % (2 * np.pi) - np.pi
        got = swing_twist_decompose(quat_to_matrix(q), a).twist_angle
        assert abs(((got - ang) + np.pi) % (2 * np.pi) - np.pi) < 1e-9


# kabsch

def test_kabsch_identity(rng):
    p = rng.normal(size=(6, 3))
    np.testing.assert_allclose(kabsch_rotation(p, p), np.eye(3), atol=1e-12)


def test_kabsch_recovers_rotation_and_ignores_translation(rng):
    for _ in range(20):
        p = rng.normal(size=(8, 3))
        q = random_rotations(rng, 1)[0]
        np.testing.assert_allclose(kabsch_rotation(p, p @ q.T + rng.normal(size=3)), q, atol=1e-9)
        shift = rng.normal(size=3)
        np.testing.assert_allclose(kabsch_rotation(p + shift, p @ q.T + shift), q, atol=1e-9)


def test_kabsch_reflection_gives_proper_rotation(rng):
    p = rng.normal(size=(5, 3))
    r = kabsch_rotation(p, p * [1, 1, -1])
    assert np.linalg.det(r) == pytest.approx(1.0)


def test_kabsch_noisy_matches_grid_search(rng):
    p = rng.uniform(-0.5, 0.5, (10, 3))
    q = random_rotations(rng, 1)[0]
    tgt = p @ q.T + rng.normal(0, 0.001, p.shape)
    r = kabsch_rotation(p, tgt)
    assert np.rad2deg(geodesic_angle(r, q)) < 1.0

    pc, tc = p - p.mean(0), tgt - tgt.mean(0)

    def cost(m):
        return ((pc @ m.T - tc) ** 2).sum()

    # 0.1 deg grid of perturbations about the truth, +-1.5 deg per axis
    g = np.deg2rad(np.arange(-1.5, 1.51, 0.1))
    best, best_m = np.inf, None
    for x in g:
        for y in g:
            for z in g:
                m = quat_to_matrix(quat_axis_angle([x, y, z], np.linalg.norm([x, y, z]))) \
                    if (x or y or z) else np.eye(3)
                m = m @ q
                c = cost(m)
                if c < best:
                    best, best_m = c, m
    assert cost(r) <= best + 1e-12
    assert np.rad2deg(geodesic_angle(r, best_m)) < 0.1 * math.sqrt(3)


@pytest.mark.parametrize("pts", [np.zeros((4, 3)), np.outer(np.arange(4.0), [1, 2, 3]),
                                 np.eye(3)[:2]])
def test_kabsch_rank_deficient(pts):
    with pytest.raises(DegenerateGeometryError, match="rank deficient"):
        kabsch_rotation(pts, pts)


# geodesic

def test_geodesic_basic():
    assert geodesic_angle(np.eye(3), np.eye(3)) == 0.0
    rx = axis_angle_matrix(np.array([1.0, 0, 0]), np.pi / 2)
    assert geodesic_angle(np.eye(3), rx) == pytest.approx(np.pi / 2, abs=1e-15)


def test_geodesic_matches_axis_angle_oracle(rng):
    for _ in range(200):
        a, b = random_rotations(rng, 2)
        _, ang = axis_angle_from_matrix(a.T @ b)
        assert geodesic_angle(a, b) == pytest.approx(abs(ang), abs=1e-9)


def test_geodesic_near_half_turn():
    r = axis_angle_matrix(np.array([0, 0, 1.0]), np.pi - 1e-9)
    assert geodesic_angle(np.eye(3), r) == pytest.approx(np.pi - 1e-9, abs=1e-12)


def test_quat_rotate_agrees_with_matrix(rng):
    # sanity of the oracle itself
    q = random_quat(rng)
    v = rng.normal(size=3)
    np.testing.assert_allclose(quat_rotate(q, v), quat_to_matrix(q) @ v, atol=1e-12)
