"""Kinematic initialization: joint positions -> humanoid reference trajectory.

Segment orientations come from change-of-basis rotations along the tree (root
outward), never from an IK solve. Each spherical joint's local rotation is the
parent segment's world orientation transposed times the child segment's; knees
and elbows are reduced to a single hinge angle, with the hinge axis recovered
from the bend plane when the limb is flexed.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateGeometryError, SchemaError
from .humanoid import JOINT_REVOLUTE, JOINT_SPHERICAL, HumanoidModel, pack_model
from .pose_core import PoseSequence, Skeleton
from .rotations import (
    mat_to_quat,
    quat_canonical,
    quat_diff_rotvec,
    quat_normalize,
    quat_rotate,
    quat_to_mat,
    rotvec_to_quat,
    shortest_arc,
)

_COLLINEAR_EPS = 1e-8
# sin(hinge angle) below which the bend plane is unreliable and limb
# orientation falls back to the no-twist shortest arc
_HINGE_PLANE_EPS = 5e-3


def basis_from_joints(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Right-handed orthonormal basis from three points.

    Columns: x along (c - b), y perpendicular to x in the (a - b) half-plane
    via cross(a - b, x), z completing the frame. With a above b and c to the
    side, an axis-aligned triple maps to the identity.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    x = c - b
    nx = np.linalg.norm(x)
    if nx < _COLLINEAR_EPS:
        raise DegenerateGeometryError("basis points b and c coincide")
    x = x / nx
    y = np.cross(a - b, x)
    ny = np.linalg.norm(y)
    if ny < _COLLINEAR_EPS:
        raise DegenerateGeometryError("basis points are collinear")
    y = y / ny
    z = np.cross(x, y)
    return np.column_stack((x, y, z))


def rotation_between_bases(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Unit quaternion q with R(q) @ A = B; canonical sign (w >= 0)."""
    for name, M in (("A", A), ("B", B)):
        M = np.asarray(M, dtype=np.float64)
        if M.shape != (3, 3) or np.abs(M @ M.T - np.eye(3)).max() > 1e-6:
            raise ValueError(f"basis {name} is not orthonormal")
        if np.linalg.det(M) < 0:
            raise ValueError(f"basis {name} is not right-handed")
    return mat_to_quat(np.asarray(B) @ np.asarray(A).T)


# ---------------------------------------------------------------------------
# Canonical role resolution with midpoint synthesis
# ---------------------------------------------------------------------------

_REQUIRED_ROLES = [
    "left_shoulder", "right_shoulder", "left_elbow", "right_elbow",
    "left_wrist", "right_wrist", "left_hip", "right_hip",
    "left_knee", "right_knee", "left_ankle", "right_ankle",
]

# role -> list of candidate joint-name groups; a group of several names
# resolves to their midpoint
_ROLE_SOURCES = {
    "pelvis": [["pelvis"], ["left_hip", "right_hip"]],
    "thorax": [["thorax"], ["left_shoulder", "right_shoulder"]],
    "neck": [["neck"]],
    "head": [["head"], ["left_ear", "right_ear"], ["nose"]],
    "left_toe": [["left_toe"], ["left_big_toe", "left_small_toe"], ["left_big_toe"]],
    "right_toe": [["right_toe"], ["right_big_toe", "right_small_toe"], ["right_big_toe"]],
    "left_heel": [["left_heel"]],
    "right_heel": [["right_heel"]],
}


def resolve_roles(skeleton: Skeleton) -> dict[str, tuple[int, ...]]:
    """Map canonical roles to the joint indices averaged to produce them."""
    roles: dict[str, tuple[int, ...]] = {}
    for name in _REQUIRED_ROLES:
        if not skeleton.has_joint(name):
            raise SchemaError(f"skeleton is missing required joint {name!r}")
        roles[name] = (skeleton.index_of(name),)
    for role, groups in _ROLE_SOURCES.items():
        for group in groups:
            if all(skeleton.has_joint(n) for n in group):
                roles[role] = tuple(skeleton.index_of(n) for n in group)
                break
    if "pelvis" not in roles:
        raise SchemaError("cannot resolve pelvis (no pelvis joint and no hip pair)")
    if "thorax" not in roles:
        raise SchemaError("cannot resolve thorax (no thorax joint and no shoulder pair)")
    return roles


def role_positions(seq: PoseSequence, roles: dict[str, tuple[int, ...]]) -> dict[str, np.ndarray]:
    """(T, 3) world position per resolved role."""
    return {r: seq.frames[:, idx, :].mean(axis=1) for r, idx in roles.items()}


def has_foot_orientation(skeleton: Skeleton) -> bool:
    """True when toe+heel joints exist so ankle orientation is observable."""
    roles = {}
    for role, groups in _ROLE_SOURCES.items():
        for group in groups:
            if all(skeleton.has_joint(n) for n in group):
                roles[role] = True
                break
    return all(r in roles for r in ("left_toe", "right_toe", "left_heel", "right_heel"))


# ---------------------------------------------------------------------------
# Trajectory containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KinematicPose:
    """One frame of the humanoid reference, in named form."""

    root_position: np.ndarray
    root_orientation: np.ndarray            # unit quaternion, canonical sign
    joint_orientations: dict[str, np.ndarray | float]  # quat or hinge angle


@dataclass(frozen=True)
class KinematicTrajectory:
    """Packed reference poses/velocities in the simulator's state layout."""

    qs: np.ndarray   # (T, NQ)
    vs: np.ndarray   # (T, NV)
    fps: float
    ankles_neutral: bool = False  # input lacked toe/heel joints

    @property
    def num_frames(self) -> int:
        return self.qs.shape[0]

    def pose(self, t: int, model: HumanoidModel) -> KinematicPose:
        mp = pack_model(model)
        q = self.qs[t]
        joints: dict[str, np.ndarray | float] = {}
        for i, link in enumerate(model.links):
            if mp.jtype[i] == JOINT_SPHERICAL:
                joints[link.name] = q[mp.q_off[i]:mp.q_off[i] + 4].copy()
            elif mp.jtype[i] == JOINT_REVOLUTE:
                joints[link.name] = float(q[mp.q_off[i]])
        return KinematicPose(q[0:3].copy(), q[3:7].copy(), joints)


# ---------------------------------------------------------------------------
# Segment orientation machinery
# ---------------------------------------------------------------------------


def _unit(v, what):
    n = np.linalg.norm(v)
    if n < _COLLINEAR_EPS:
        raise DegenerateGeometryError(f"degenerate direction for {what}")
    return v / n


def _limb_orientation(u0, axis0, u, v_child, R_parent):
    """World rotation of a limb segment whose child hinges off it.

    u0/axis0: zero-pose bone direction and hinge axis (world). u: current bone
    direction. v_child: current child bone direction, fixing the bend plane
    when flexed. Near-straight limbs fall back to the twist-free swing in the
    parent frame, which keeps the result equivariant under global rotations.
    Returns (R_segment, hinge_angle >= 0).
    """
    u = _unit(u, "limb bone")
    v_child = _unit(v_child, "child bone")
    cross = np.cross(u, v_child)
    sin_a = np.linalg.norm(cross)
    cos_a = float(np.clip(np.dot(u, v_child), -1.0, 1.0))
    angle = float(np.arctan2(sin_a, cos_a))
    if sin_a > _HINGE_PLANE_EPS:
        n = cross / sin_a
        B = np.column_stack((u, n, np.cross(u, n)))
        B0 = np.column_stack((u0, axis0, np.cross(u0, axis0)))
        R = B @ B0.T
    else:
        u_local = R_parent.T @ u
        R = R_parent @ quat_to_mat(
            shortest_arc(np.asarray(u0, dtype=np.float64), u_local))
        angle = 0.0 if cos_a > 0 else float(np.pi)
    return R, angle


def _chest_up_reference(pos, t):
    neck = pos.get("neck")
    thorax = pos["thorax"][t]
    if neck is not None and np.linalg.norm(neck[t] - thorax) > 1e-6:
        return neck[t]
    head = pos.get("head")
    if head is not None and np.linalg.norm(head[t] - thorax) > 1e-6:
        return head[t]
    return thorax + (thorax - pos["pelvis"][t])


def initialize_kinematics(seq: PoseSequence, model: HumanoidModel) -> KinematicTrajectory:
    """Per-frame humanoid pose from joint positions, velocities filled by
    finite differences."""
    roles = resolve_roles(seq.skeleton)
    pos = role_positions(seq, roles)
    feet_known = has_foot_orientation(seq.skeleton)
    mp = pack_model(model)
    zero = model.marker_world_zero()

    def z(name):
        if name not in zero:
            raise SchemaError(f"model has no marker {name!r}")
        return zero[name]

    # zero-pose reference bases, built with the same rules applied per frame
    B0_pelvis = basis_from_joints(z("thorax"), z("pelvis"), z("right_hip"))
    B0_chest = basis_from_joints(z("neck"), z("thorax"), z("right_shoulder"))
    head_u0 = _unit(z("head") - z("neck"), "zero-pose head")
    limb0 = {}
    for side in ("left", "right"):
        sgn = 1.0 if side == "left" else -1.0
        limb0[f"{side}_upper_arm"] = (
            _unit(z(f"{side}_elbow") - z(f"{side}_shoulder"), "zero-pose upper arm"),
            np.array([0.0, 0.0, -sgn]),  # elbow axis, world at zero pose
        )
        limb0[f"{side}_thigh"] = (
            _unit(z(f"{side}_knee") - z(f"{side}_hip"), "zero-pose thigh"),
            np.array([0.0, 1.0, 0.0]),   # knee axis
        )
        limb0[f"{side}_foot"] = basis_from_joints(
            z(f"{side}_ankle"), z(f"{side}_heel"), z(f"{side}_toe"))

    T = seq.num_frames
    qs = np.zeros((T, mp.nq))
    vs = np.zeros((T, mp.nv))

    def set_quat(body_name, t, quat):
        i = model.link_index(body_name)
        qs[t, mp.q_off[i]:mp.q_off[i] + 4] = quat_canonical(quat_normalize(quat))

    def set_angle(body_name, t, angle):
        i = model.link_index(body_name)
        qs[t, mp.q_off[i]] = angle

    for t in range(T):
        B_pelvis = basis_from_joints(pos["thorax"][t], pos["pelvis"][t],
                                     pos["right_hip"][t])
        R_pelvis = B_pelvis @ B0_pelvis.T
        qs[t, 0:3] = pos["pelvis"][t]
        qs[t, 3:7] = quat_canonical(mat_to_quat(R_pelvis))

        B_chest = basis_from_joints(_chest_up_reference(pos, t), pos["thorax"][t],
                                    pos["right_shoulder"][t])
        R_chest = B_chest @ B0_chest.T
        set_quat("chest", t, mat_to_quat(R_pelvis.T @ R_chest))

        if "head" in pos and "neck" in pos:
            head_u = pos["head"][t] - pos["neck"][t]
            if np.linalg.norm(head_u) > _COLLINEAR_EPS:
                # twist-free swing in the chest frame (equivariant)
                u_local = R_chest.T @ _unit(head_u, "head")
                set_quat("head", t, shortest_arc(head_u0, u_local))
            else:
                set_quat("head", t, np.array([1.0, 0.0, 0.0, 0.0]))
        else:
            set_quat("head", t, np.array([1.0, 0.0, 0.0, 0.0]))

        for side in ("left", "right"):
            u0, axis0 = limb0[f"{side}_upper_arm"]
            R_ua, elbow = _limb_orientation(
                u0, axis0,
                pos[f"{side}_elbow"][t] - pos[f"{side}_shoulder"][t],
                pos[f"{side}_wrist"][t] - pos[f"{side}_elbow"][t], R_chest)
            set_quat(f"{side}_upper_arm", t, mat_to_quat(R_chest.T @ R_ua))
            set_angle(f"{side}_forearm", t, elbow)

            u0, axis0 = limb0[f"{side}_thigh"]
            R_thigh, knee = _limb_orientation(
                u0, axis0,
                pos[f"{side}_knee"][t] - pos[f"{side}_hip"][t],
                pos[f"{side}_ankle"][t] - pos[f"{side}_knee"][t], R_pelvis)
            set_quat(f"{side}_thigh", t, mat_to_quat(R_pelvis.T @ R_thigh))
            set_angle(f"{side}_shin", t, knee)

            shin_i = model.link_index(f"{side}_shin")
            axis = np.asarray(model.links[shin_i].joint.axis)
            R_shin = R_thigh @ quat_to_mat(rotvec_to_quat(axis * knee))
            if feet_known:
                B_foot = basis_from_joints(pos[f"{side}_ankle"][t],
                                           pos[f"{side}_heel"][t],
                                           pos[f"{side}_toe"][t])
                R_foot = B_foot @ limb0[f"{side}_foot"].T
                set_quat(f"{side}_foot", t, mat_to_quat(R_shin.T @ R_foot))
            else:
                set_quat(f"{side}_foot", t, np.array([1.0, 0.0, 0.0, 0.0]))

    traj = KinematicTrajectory(qs=qs, vs=vs, fps=seq.fps,
                               ankles_neutral=not feet_known)
    return finite_difference_velocities(traj, seq.fps, model)


def finite_difference_velocities(traj: KinematicTrajectory, fps: float,
                                 model: HumanoidModel) -> KinematicTrajectory:
    """First-order velocities; the last frame copies the previous one.

    Angular rates use the quaternion logarithm of the frame-to-frame relative
    rotation. Root angular velocity is stored in world coordinates to match
    the simulator's state layout.
    """
    T = traj.num_frames
    if T < 2:
        raise ValueError("need at least 2 frames for finite differences")
    mp = pack_model(model)
    qs = traj.qs
    vs = np.zeros((T, mp.nv))
    for t in range(T - 1):
        vs[t, 3:6] = (qs[t + 1, 0:3] - qs[t, 0:3]) * fps
        w_body = quat_diff_rotvec(qs[t, 3:7], qs[t + 1, 3:7]) * fps
        vs[t, 0:3] = quat_rotate(qs[t, 3:7], w_body)
        for i in range(len(mp.parent)):
            qo, vo = mp.q_off[i], mp.v_off[i]
            if mp.jtype[i] == JOINT_SPHERICAL:
                vs[t, vo:vo + 3] = quat_diff_rotvec(qs[t, qo:qo + 4],
                                                    qs[t + 1, qo:qo + 4]) * fps
            elif mp.jtype[i] == JOINT_REVOLUTE:
                vs[t, vo] = (qs[t + 1, qo] - qs[t, qo]) * fps
    vs[T - 1] = vs[T - 2]
    return replace(traj, vs=vs)
