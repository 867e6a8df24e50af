"""Synthetic canonical pose fixtures for experiments and acceptance tests.

All fixtures are H36M17-format sequences built from the humanoid's own marker
geometry, so kinematic initialization reproduces them exactly. The scripted
fall is generated from an independent rigid-body pendulum ODE, not from the
simulator.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import solve_ivp

from .humanoid import HumanoidModel, default_model
from .pose_core import BASE23_JOINTS, H36M17_JOINTS, PoseSequence, Skeleton

STAND_ROOT_Z = 0.98  # zero-pose soles rest on z=0 with the pelvis here

# face points rigid with the head marker, for BASE23 fixtures
_FACE_OFFSETS = {
    "nose": (0.08, 0.0, 0.02),
    "left_eye": (0.06, 0.03, 0.05),
    "right_eye": (0.06, -0.03, 0.05),
    "left_ear": (0.0, 0.07, 0.0),
    "right_ear": (0.0, -0.07, 0.0),
}


def _h36m_frame(markers: dict[str, np.ndarray]) -> np.ndarray:
    """One (17, 3) H36M17 frame from role-named marker positions."""
    m = dict(markers)
    m["spine"] = 0.5 * (m["pelvis"] + m["thorax"])
    return np.stack([m[name] for name in H36M17_JOINTS])


def _base23_frame(markers: dict[str, np.ndarray]) -> np.ndarray:
    """One (26, 3) canonical BASE23 frame; face points ride with the head,
    toe pairs straddle the model's toe marker."""
    m = dict(markers)
    for name, off in _FACE_OFFSETS.items():
        m[name] = m["head"] + np.asarray(off)
    for side, sign in (("left", 1.0), ("right", -1.0)):
        toe = m[f"{side}_toe"]
        m[f"{side}_big_toe"] = toe + np.array([0.0, -sign * 0.02, 0.0])
        m[f"{side}_small_toe"] = toe + np.array([0.0, sign * 0.02, 0.0])
    return np.stack([m[name] for name in BASE23_JOINTS])


def _zero_markers(model: HumanoidModel) -> dict[str, np.ndarray]:
    base = model.marker_world_zero()
    return {k: np.asarray(v) + np.array([0.0, 0.0, STAND_ROOT_Z])
            for k, v in base.items()}


def standing_sequence(T: int = 50, fps: float = 25.0,
                      model: HumanoidModel | None = None) -> PoseSequence:
    """Motionless zero-pose body; soles exactly on the ground."""
    model = model or default_model()
    frame = _h36m_frame(_zero_markers(model))
    frames = np.tile(frame, (T, 1, 1))
    return PoseSequence(Skeleton.from_format("H36M17"), fps, frames)


def fall_dynamics(model: HumanoidModel, theta0: float, omega0: float,
                  duration: float):
    """Rigid-body toppling about the toe line: independent pendulum oracle.

    Returns (theta_of_t callable, torso_contact_time, pivot point). The body
    rotates rigidly about the world y-axis through the toe edge; contact time
    is when any non-foot collision sphere first touches the ground.
    """
    pivot = np.array([0.11, 0.0, 0.0])  # toe edge, soles on z=0
    root_shift = np.array([0.0, 0.0, STAND_ROOT_Z])

    # mass properties about the pivot's y-axis at the zero pose
    total_m = 0.0
    I_pivot = 0.0
    com_accum = np.zeros(3)
    origin = {None: np.zeros(3)}
    for link in model.links:
        base = origin[link.parent]
        o = base + np.asarray(link.joint.origin)
        origin[link.name] = o
        c = o + np.asarray(link.com) + root_shift - pivot
        total_m += link.mass
        com_accum += link.mass * c
        I_pivot += link.mass * (c[0] ** 2 + c[2] ** 2) + link.inertia[1][1]
    com0 = com_accum / total_m
    g = 9.81

    def rhs(t, y):
        th, w = y
        # com rotated by th about +y: x' = cos*x + sin*z
        rx = math.cos(th) * com0[0] + math.sin(th) * com0[2]
        return [w, total_m * g * rx / I_pivot]

    sol = solve_ivp(rhs, (0.0, duration), [theta0, omega0], rtol=1e-10,
                    atol=1e-12, dense_output=True, max_step=0.01)

    spheres = []  # (rel pos to pivot, radius) of every non-foot contact sphere
    for link in model.links:
        if link.is_foot:
            continue
        c = link.collision
        pts = [c.p0, c.p1] if c.type == "capsule" else [c.p0]
        for p in pts:
            rel = origin[link.name] + np.asarray(p) + root_shift - pivot
            spheres.append((rel, c.radius))

    def min_clearance(th):
        ct, st = math.cos(th), math.sin(th)
        best = np.inf
        for rel, radius in spheres:
            z = -st * rel[0] + ct * rel[2]
            best = min(best, z - radius)
        return best

    t_contact = duration
    ts = np.linspace(0.0, duration, 4001)
    for i in range(1, len(ts)):
        if min_clearance(sol.sol(ts[i])[0]) <= 0.0:
            lo, hi = ts[i - 1], ts[i]
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if min_clearance(sol.sol(mid)[0]) <= 0.0:
                    hi = mid
                else:
                    lo = mid
            t_contact = 0.5 * (lo + hi)
            break

    def theta(t):
        return float(sol.sol(min(t, t_contact))[0])

    return theta, t_contact, pivot


def scripted_fall_sequence(T: int = 50, fps: float = 25.0,
                           theta0: float = 0.2, omega0: float = 0.5,
                           model: HumanoidModel | None = None):
    """Forward toppling fixture; returns (sequence, scripted contact frame).

    The pose freezes at the torso-contact angle; the scripted frame is the
    first frame index at or after the analytic contact time.
    """
    model = model or default_model()
    markers = _zero_markers(model)
    theta, t_contact, pivot = fall_dynamics(model, theta0, omega0, T / fps)

    def rotate(p, th):
        rel = p - pivot
        ct, st = math.cos(th), math.sin(th)
        return pivot + np.array([ct * rel[0] + st * rel[2], rel[1],
                                 -st * rel[0] + ct * rel[2]])

    frames = np.empty((T, len(H36M17_JOINTS), 3))
    for t in range(T):
        th = theta(t / fps)
        frames[t] = _h36m_frame({k: rotate(v, th) for k, v in markers.items()})
    seq = PoseSequence(Skeleton.from_format("H36M17"), fps, frames)
    contact_frame = int(math.ceil(t_contact * fps))
    return seq, contact_frame


def stepping_sequence(T: int = 75, fps: float = 25.0, amplitude: float = 0.04,
                      frequency_hz: float = 0.4,
                      model: HumanoidModel | None = None) -> PoseSequence:
    """Weight shifting in place: pelvis sways laterally while the feet stay
    planted and flat; knees flex to keep leg lengths consistent (2-link IK).

    Emitted in BASE23 format so the flat foot orientation is observable
    through the toe/heel joints.
    """
    model = model or default_model()
    markers = _zero_markers(model)
    L = 0.42  # thigh and shank lengths
    pelvis_z = STAND_ROOT_Z - 0.003  # just enough crouch for the sway slack
    upper = ["pelvis", "thorax", "neck", "head",
             "left_shoulder", "right_shoulder", "left_elbow", "right_elbow",
             "left_wrist", "right_wrist"]

    lean = 0.0
    frames = np.empty((T, len(BASE23_JOINTS), 3))
    for t in range(T):
        tt = t / fps
        ramp = min(1.0, tt / 1.0)
        s = amplitude * ramp * math.sin(2.0 * math.pi * frequency_hz * tt)
        mk = {}
        shift = np.array([lean, s, pelvis_z - STAND_ROOT_Z])
        for name in upper:
            mk[name] = markers[name] + shift
        for side, sign in (("left", 1.0), ("right", -1.0)):
            ankle = np.array([0.0, sign * 0.09, 0.07])
            hip = mk["pelvis"] + np.array([0.0, sign * 0.09, -0.07])
            d = np.linalg.norm(ankle - hip)
            d = min(d, 2.0 * L - 1e-9)
            h = math.sqrt(max(L * L - 0.25 * d * d, 0.0))
            mid = 0.5 * (hip + ankle)
            mk[f"{side}_hip"] = hip
            mk[f"{side}_knee"] = mid + np.array([h, 0.0, 0.0])
            mk[f"{side}_ankle"] = ankle
            mk[f"{side}_heel"] = ankle + np.array([-0.11, 0.0, -0.07])
            mk[f"{side}_toe"] = ankle + np.array([0.11, 0.0, -0.07])
        frames[t] = _base23_frame(mk)
    return PoseSequence(Skeleton.from_format("BASE23"), fps, frames)
