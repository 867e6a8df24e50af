"""Quaternion / rotation helpers shared by kinematics and simulation.

Quaternions are float64 arrays laid out (w, x, y, z). All functions are
numba-jitted so the simulation kernels can call them in nopython mode;
they remain callable from plain Python.
"""

import numpy as np
from numba import njit

# Below this rotation angle the exact log/exp formulas divide by ~0;
# first-order expansions are used instead.
SMALL_ANGLE = 1e-8


@njit(cache=True, nogil=True)
def quat_identity():
    q = np.zeros(4)
    q[0] = 1.0
    return q


@njit(cache=True, nogil=True)
def quat_normalize(q):
    n = np.sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3])
    return q / n


@njit(cache=True, nogil=True)
def quat_canonical(q):
    """Flip sign so the scalar part is non-negative."""
    if q[0] < 0.0:
        return -q
    return q.copy()


@njit(cache=True, nogil=True)
def quat_conj(q):
    out = np.empty(4)
    out[0] = q[0]
    out[1] = -q[1]
    out[2] = -q[2]
    out[3] = -q[3]
    return out


@njit(cache=True, nogil=True)
def quat_mul(a, b):
    out = np.empty(4)
    out[0] = a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3]
    out[1] = a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2]
    out[2] = a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1]
    out[3] = a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]
    return out


@njit(cache=True, nogil=True)
def quat_rotate(q, v):
    """Rotate 3-vector v by unit quaternion q."""
    qw, qx, qy, qz = q[0], q[1], q[2], q[3]
    # t = 2 * (q_vec x v)
    tx = 2.0 * (qy * v[2] - qz * v[1])
    ty = 2.0 * (qz * v[0] - qx * v[2])
    tz = 2.0 * (qx * v[1] - qy * v[0])
    out = np.empty(3)
    out[0] = v[0] + qw * tx + (qy * tz - qz * ty)
    out[1] = v[1] + qw * ty + (qz * tx - qx * tz)
    out[2] = v[2] + qw * tz + (qx * ty - qy * tx)
    return out


@njit(cache=True, nogil=True)
def quat_to_mat(q):
    w, x, y, z = q[0], q[1], q[2], q[3]
    R = np.empty((3, 3))
    R[0, 0] = 1.0 - 2.0 * (y * y + z * z)
    R[0, 1] = 2.0 * (x * y - w * z)
    R[0, 2] = 2.0 * (x * z + w * y)
    R[1, 0] = 2.0 * (x * y + w * z)
    R[1, 1] = 1.0 - 2.0 * (x * x + z * z)
    R[1, 2] = 2.0 * (y * z - w * x)
    R[2, 0] = 2.0 * (x * z - w * y)
    R[2, 1] = 2.0 * (y * z + w * x)
    R[2, 2] = 1.0 - 2.0 * (x * x + y * y)
    return R


@njit(cache=True, nogil=True)
def mat_to_quat(R):
    """Shepperd's method; returns canonical (w >= 0) unit quaternion."""
    q = np.empty(4)
    tr = R[0, 0] + R[1, 1] + R[2, 2]
    if tr > 0.0:
        s = np.sqrt(tr + 1.0) * 2.0
        q[0] = 0.25 * s
        q[1] = (R[2, 1] - R[1, 2]) / s
        q[2] = (R[0, 2] - R[2, 0]) / s
        q[3] = (R[1, 0] - R[0, 1]) / s
    elif R[0, 0] > R[1, 1] and R[0, 0] > R[2, 2]:
        s = np.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2]) * 2.0
        q[0] = (R[2, 1] - R[1, 2]) / s
        q[1] = 0.25 * s
        q[2] = (R[0, 1] + R[1, 0]) / s
        q[3] = (R[0, 2] + R[2, 0]) / s
    elif R[1, 1] > R[2, 2]:
        s = np.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2]) * 2.0
        q[0] = (R[0, 2] - R[2, 0]) / s
        q[1] = (R[0, 1] + R[1, 0]) / s
        q[2] = 0.25 * s
        q[3] = (R[1, 2] + R[2, 1]) / s
    else:
        s = np.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1]) * 2.0
        q[0] = (R[1, 0] - R[0, 1]) / s
        q[1] = (R[0, 2] + R[2, 0]) / s
        q[2] = (R[1, 2] + R[2, 1]) / s
        q[3] = 0.25 * s
    return quat_canonical(quat_normalize(q))


@njit(cache=True, nogil=True)
def rotvec_to_quat(r):
    angle = np.sqrt(r[0] * r[0] + r[1] * r[1] + r[2] * r[2])
    q = np.empty(4)
    if angle < SMALL_ANGLE:
        q[0] = 1.0
        q[1] = 0.5 * r[0]
        q[2] = 0.5 * r[1]
        q[3] = 0.5 * r[2]
        return quat_normalize(q)
    half = 0.5 * angle
    s = np.sin(half) / angle
    q[0] = np.cos(half)
    q[1] = r[0] * s
    q[2] = r[1] * s
    q[3] = r[2] * s
    return q


@njit(cache=True, nogil=True)
def quat_to_rotvec(q):
    qc = quat_canonical(quat_normalize(q))
    w = qc[0]
    vn = np.sqrt(qc[1] * qc[1] + qc[2] * qc[2] + qc[3] * qc[3])
    out = np.empty(3)
    if vn < SMALL_ANGLE:
        out[0] = 2.0 * qc[1]
        out[1] = 2.0 * qc[2]
        out[2] = 2.0 * qc[3]
        return out
    angle = 2.0 * np.arctan2(vn, w)
    s = angle / vn
    out[0] = qc[1] * s
    out[1] = qc[2] * s
    out[2] = qc[3] * s
    return out


@njit(cache=True, nogil=True)
def quat_diff_rotvec(q_from, q_to):
    """Rotation vector taking q_from to q_to, expressed in q_from's frame."""
    return quat_to_rotvec(quat_mul(quat_conj(q_from), q_to))


@njit(cache=True, nogil=True)
def shortest_arc(u, v):
    """Unit quaternion rotating unit vector u onto unit vector v with no twist."""
    d = u[0] * v[0] + u[1] * v[1] + u[2] * v[2]
    q = np.empty(4)
    if d < -1.0 + 1e-12:
        # pick any axis orthogonal to u for the 180 degree case
        ax = np.empty(3)
        if abs(u[0]) < 0.9:
            ax[0], ax[1], ax[2] = 1.0, 0.0, 0.0
        else:
            ax[0], ax[1], ax[2] = 0.0, 1.0, 0.0
        cx = u[1] * ax[2] - u[2] * ax[1]
        cy = u[2] * ax[0] - u[0] * ax[2]
        cz = u[0] * ax[1] - u[1] * ax[0]
        n = np.sqrt(cx * cx + cy * cy + cz * cz)
        q[0] = 0.0
        q[1] = cx / n
        q[2] = cy / n
        q[3] = cz / n
        return q
    cx = u[1] * v[2] - u[2] * v[1]
    cy = u[2] * v[0] - u[0] * v[2]
    cz = u[0] * v[1] - u[1] * v[0]
    q[0] = 1.0 + d
    q[1] = cx
    q[2] = cy
    q[3] = cz
    return quat_canonical(quat_normalize(q))


@njit(cache=True, nogil=True)
def euler_xyz_to_quat(e):
    """Intrinsic X-Y-Z Euler angles (radians) to quaternion."""
    hx, hy, hz = 0.5 * e[0], 0.5 * e[1], 0.5 * e[2]
    cx, sx = np.cos(hx), np.sin(hx)
    cy, sy = np.cos(hy), np.sin(hy)
    cz, sz = np.cos(hz), np.sin(hz)
    q = np.empty(4)
    q[0] = cx * cy * cz - sx * sy * sz
    q[1] = sx * cy * cz + cx * sy * sz
    q[2] = cx * sy * cz - sx * cy * sz
    q[3] = cx * cy * sz + sx * sy * cz
    return q


@njit(cache=True, nogil=True)
def quat_to_euler_xyz(q):
    """Quaternion to intrinsic X-Y-Z Euler angles; pitch pinned at gimbal lock."""
    R = quat_to_mat(quat_normalize(q))
    e = np.empty(3)
    sy = R[0, 2]
    if sy > 1.0:
        sy = 1.0
    elif sy < -1.0:
        sy = -1.0
    e[1] = np.arcsin(sy)
    if abs(sy) < 1.0 - 1e-9:
        e[0] = np.arctan2(-R[1, 2], R[2, 2])
        e[2] = np.arctan2(-R[0, 1], R[0, 0])
    else:
        e[0] = np.arctan2(R[2, 1], R[1, 1])
        e[2] = 0.0
    return e


@njit(cache=True, nogil=True)
def wrap_angle(a):
    """Wrap scalar angle to (-pi, pi]."""
    out = a % (2.0 * np.pi)
    if out > np.pi:
        out -= 2.0 * np.pi
    return out


def quats_to_euler_xyz(quats):
    """Vectorized helper: (..., 4) quaternion array to (..., 3) Euler angles."""
    flat = np.ascontiguousarray(quats, dtype=np.float64).reshape(-1, 4)
    out = np.empty((flat.shape[0], 3))
    for i in range(flat.shape[0]):
        out[i] = quat_to_euler_xyz(flat[i])
    return out.reshape(quats.shape[:-1] + (3,))


def eulers_to_quats(eulers):
    """Vectorized helper: (..., 3) Euler angles to (..., 4) quaternions."""
    flat = np.ascontiguousarray(eulers, dtype=np.float64).reshape(-1, 3)
    out = np.empty((flat.shape[0], 4))
    for i in range(flat.shape[0]):
        out[i] = euler_xyz_to_quat(flat[i])
    return out.reshape(eulers.shape[:-1] + (4,))
