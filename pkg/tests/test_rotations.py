import numpy as np
from hypothesis import given
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation as SR

from posesim import rotations as rot

from .oracles import quat_wxyz_from_scipy, scipy_rot_from_quat_wxyz

rotvecs = st.lists(st.floats(-3.0, 3.0), min_size=3, max_size=3).map(np.array)
unit_vecs = rotvecs.filter(lambda v: np.linalg.norm(v) > 1e-3).map(
    lambda v: v / np.linalg.norm(v))


@given(rotvecs)
def test_rotvec_quat_round_trip_matches_scipy(r):
    q = rot.rotvec_to_quat(r)
    ref = quat_wxyz_from_scipy(SR.from_rotvec(r))
    assert np.allclose(rot.quat_canonical(q), ref, atol=1e-12)
    back = rot.quat_to_rotvec(q)
    assert np.allclose(SR.from_rotvec(back).as_matrix(),
                       SR.from_rotvec(r).as_matrix(), atol=1e-9)


@given(rotvecs, rotvecs)
def test_quat_mul_matches_scipy_composition(a, b):
    qa, qb = rot.rotvec_to_quat(a), rot.rotvec_to_quat(b)
    ours = rot.quat_mul(qa, qb)
    ref = quat_wxyz_from_scipy(SR.from_rotvec(a) * SR.from_rotvec(b))
    assert np.allclose(rot.quat_canonical(ours), ref, atol=1e-12)


@given(rotvecs, rotvecs)
def test_quat_rotate_matches_matrix(r, v):
    q = rot.rotvec_to_quat(r)
    assert np.allclose(rot.quat_rotate(q, v), rot.quat_to_mat(q) @ v, atol=1e-12)


@given(rotvecs)
def test_mat_quat_round_trip(r):
    R = SR.from_rotvec(r).as_matrix()
    q = rot.mat_to_quat(R)
    assert q[0] >= 0
    assert abs(np.linalg.norm(q) - 1.0) < 1e-12
    assert np.allclose(rot.quat_to_mat(q), R, atol=1e-9)


@given(rotvecs)
def test_euler_xyz_matches_scipy(r):
    q = rot.rotvec_to_quat(r)
    e = rot.quat_to_euler_xyz(q)
    ref = scipy_rot_from_quat_wxyz(q)
    assert np.allclose(SR.from_euler("XYZ", e).as_matrix(), ref.as_matrix(),
                       atol=1e-9)
    q2 = rot.euler_xyz_to_quat(e)
    assert np.allclose(rot.quat_to_mat(q2), ref.as_matrix(), atol=1e-9)


@given(unit_vecs, unit_vecs)
def test_shortest_arc_maps_u_to_v(u, v):
    q = rot.shortest_arc(u, v)
    assert np.allclose(rot.quat_rotate(q, u), v, atol=1e-9)


def test_small_angle_paths():
    tiny = np.array([1e-12, -2e-13, 5e-13])
    q = rot.rotvec_to_quat(tiny)
    assert np.allclose(rot.quat_to_rotvec(q), tiny, atol=1e-15)
    assert np.allclose(rot.quat_to_rotvec(rot.quat_identity()), 0.0)


def test_canonical_sign():
    q = np.array([-0.5, 0.5, 0.5, 0.5])
    qc = rot.quat_canonical(q)
    assert qc[0] >= 0
    assert np.allclose(rot.quat_to_mat(q), rot.quat_to_mat(qc))
