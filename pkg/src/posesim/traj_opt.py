"""Sliding-window CMA-ES optimization of the kinematic targets.

Search space per window: clamped cubic B-spline control points over all 28
controllable Euler channels. Each window warm-starts from the previous
window's accepted solution over the overlap and is simulated from the
end-state the previous window reached at the new window's start frame.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .cmaes import cmaes_minimize
from .humanoid import JOINT_REVOLUTE, JOINT_SPHERICAL, HumanoidModel, pack_model
from .humanoid_sim import TARGET_HZ, RolloutResult, SimParams, Simulation
from .kinematics import KinematicTrajectory
from .pose_core import GroundPlane
from .rotations import (
    euler_xyz_to_quat,
    quat_diff_rotvec,
    quat_rotate,
    quat_to_euler_xyz,
)
from .spline import fit_spline, unwrap_channels, warn_if_gimbal

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CostWeights:
    com: float = 20.0
    com_velocity: float = 0.5
    root_orientation: float = 1.0
    pose: float = 1.0
    pose_velocity: float = 5.0e-3
    acceleration: float = 1.0e-10
    feet: float = 1.5
    joint_weights: np.ndarray | None = None  # per-channel, defaults to ones

    def __post_init__(self):
        for name in ("com", "com_velocity", "root_orientation", "pose",
                     "pose_velocity", "acceleration", "feet"):
            if getattr(self, name) < 0:
                raise ValueError(f"weight {name} must be >= 0")

    def to_dict(self) -> dict:
        d = {
            "com": self.com, "com_velocity": self.com_velocity,
            "root_orientation": self.root_orientation, "pose": self.pose,
            "pose_velocity": self.pose_velocity,
            "acceleration": self.acceleration, "feet": self.feet,
        }
        if self.joint_weights is not None:
            d["joint_weights"] = [float(w) for w in self.joint_weights]
        return d

    @classmethod
    def from_dict(cls, doc: dict) -> "CostWeights":
        kw = {k: doc[k] for k in ("com", "com_velocity", "root_orientation",
                                  "pose", "pose_velocity", "acceleration",
                                  "feet") if k in doc}
        if doc.get("joint_weights") is not None:
            kw["joint_weights"] = np.asarray(doc["joint_weights"], dtype=np.float64)
        return cls(**kw)


@dataclass(frozen=True)
class WindowPlan:
    window_s: float = 0.5
    overlap: float = 0.5
    iterations: int = 200
    population: int = 100
    knot_spacing_s: float = 0.08
    sigma0: float = 0.05
    divergence_penalty: float = 1.0e6

    def __post_init__(self):
        if not (0.0 <= self.overlap < 1.0):
            raise ValueError("overlap must be in [0, 1)")
        if self.window_s * TARGET_HZ < 2:
            raise ValueError("window must span at least 2 target frames")
        if self.population < 4 or self.iterations < 1:
            raise ValueError("population >= 4 and iterations >= 1 required")

    def frames_per_window(self, fps: float) -> int:
        return max(2, int(round(self.window_s * fps)))

    def advance_frames(self, fps: float) -> int:
        # cap at w-1: the next window seeds from this window's last simulated
        # frame, so starts may advance at most to that frame
        w = self.frames_per_window(fps)
        return min(max(1, int(round(w * (1.0 - self.overlap)))), w - 1)

    def to_dict(self) -> dict:
        return {
            "window_s": self.window_s, "overlap": self.overlap,
            "iterations": self.iterations, "population": self.population,
            "knot_spacing_s": self.knot_spacing_s, "sigma0": self.sigma0,
            "divergence_penalty": self.divergence_penalty,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "WindowPlan":
        return cls(**{k: doc[k] for k in cls().to_dict() if k in doc})


# ---------------------------------------------------------------------------
# Euler channel mapping for the 12 controllable joints
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChannelMap:
    entries: tuple  # (link_index, is_spherical, q_off, v_off, channel_start)
    n_channels: int
    pitch_channels: tuple[int, ...]
    ankle_channels: tuple[int, ...]

    @classmethod
    def for_model(cls, model: HumanoidModel) -> "ChannelMap":
        mp = pack_model(model)
        entries = []
        ankle = []
        pitch = []
        ch = 0
        for i, link in enumerate(model.links):
            if mp.jtype[i] == JOINT_SPHERICAL:
                entries.append((i, True, int(mp.q_off[i]), int(mp.v_off[i]), ch))
                pitch.append(ch + 1)
                if link.is_foot:
                    ankle.extend((ch, ch + 1, ch + 2))
                ch += 3
            elif mp.jtype[i] == JOINT_REVOLUTE:
                entries.append((i, False, int(mp.q_off[i]), int(mp.v_off[i]), ch))
                ch += 1
        return cls(tuple(entries), ch, tuple(pitch), tuple(ankle))


def packed_to_channels(qs: np.ndarray, cmap: ChannelMap) -> np.ndarray:
    """(F, NQ) packed poses -> (F, n_channels) intrinsic-XYZ Euler values."""
    F = qs.shape[0]
    out = np.empty((F, cmap.n_channels))
    for (i, sph, qo, vo, ch) in cmap.entries:
        if sph:
            for f in range(F):
                out[f, ch:ch + 3] = quat_to_euler_xyz(qs[f, qo:qo + 4])
        else:
            out[:, ch] = qs[:, qo]
    return out


def channels_to_packed(channels: np.ndarray, root_rows: np.ndarray,
                       cmap: ChannelMap, mp) -> np.ndarray:
    """Euler channels + reference root rows -> (F, NQ) packed target poses.

    Revolute targets are clamped to the joint limits.
    """
    F = channels.shape[0]
    qs = np.zeros((F, mp.nq))
    qs[:, 0:7] = root_rows[:, 0:7]
    for (i, sph, qo, vo, ch) in cmap.entries:
        if sph:
            for f in range(F):
                qs[f, qo:qo + 4] = euler_xyz_to_quat(channels[f, ch:ch + 3])
        else:
            qs[:, qo] = np.clip(channels[:, ch], mp.jlo[i], mp.jhi[i])
    return qs


def packed_velocities(qs: np.ndarray, fps: float, mp) -> np.ndarray:
    """Finite-difference velocities of packed pose rows (last row copies)."""
    F = qs.shape[0]
    vs = np.zeros((F, mp.nv))
    if F < 2:
        return vs
    for f in range(F - 1):
        vs[f, 3:6] = (qs[f + 1, 0:3] - qs[f, 0:3]) * fps
        w_body = quat_diff_rotvec(qs[f, 3:7], qs[f + 1, 3:7]) * fps
        vs[f, 0:3] = quat_rotate(qs[f, 3:7], w_body)
        for i in range(len(mp.parent)):
            qo, vo = mp.q_off[i], mp.v_off[i]
            if mp.jtype[i] == JOINT_SPHERICAL:
                vs[f, vo:vo + 3] = quat_diff_rotvec(qs[f, qo:qo + 4],
                                                    qs[f + 1, qo:qo + 4]) * fps
            elif mp.jtype[i] == JOINT_REVOLUTE:
                vs[f, vo] = (qs[f + 1, qo] - qs[f, qo]) * fps
    vs[F - 1] = vs[F - 2]
    return vs


def expand_joint_weights(w, cmap: ChannelMap) -> np.ndarray:
    """Per-channel weight vector from None (ones), a per-joint array (one
    entry per controllable joint, broadcast over a joint's channels), or an
    already per-channel array."""
    if w is None:
        return np.ones(cmap.n_channels)
    w = np.asarray(w, dtype=np.float64)
    if np.any(w < 0):
        raise ValueError("joint weights must be >= 0")
    if w.size == cmap.n_channels:
        return w.copy()
    if w.size == len(cmap.entries):
        out = np.empty(cmap.n_channels)
        for entry, wi in zip(cmap.entries, w):
            (_, sph, _, _, ch) = entry
            out[ch:ch + (3 if sph else 1)] = wi
        return out
    raise ValueError(
        f"joint weights need {len(cmap.entries)} (per joint) or "
        f"{cmap.n_channels} (per channel) entries, got {w.size}")


def _wrap_pi(a: np.ndarray) -> np.ndarray:
    return (a + np.pi) % (2.0 * np.pi) - np.pi


@dataclass(frozen=True)
class WindowReference:
    """Per-frame reference series a window is scored against."""

    com: np.ndarray          # (F, 3)
    com_vel: np.ndarray      # (F, 3)
    root_quat: np.ndarray    # (F, 4)
    euler: np.ndarray        # (F, C) unwrapped
    foot_contact: np.ndarray  # (F, n_feet) bool


def assemble_cost(ref: WindowReference, sim_com, sim_com_vel, sim_root_quat,
                  sim_euler, sim_foot_contact, weights: CostWeights,
                  joint_w: np.ndarray, fps: float) -> float:
    """Seven-term weighted window cost over aligned per-frame series."""
    d_com = ref.com - sim_com
    l_com = float(np.sum(d_com * d_com))
    d_cv = ref.com_vel - sim_com_vel
    l_comv = float(np.sum(d_cv * d_cv))
    dots = np.abs(np.sum(ref.root_quat * sim_root_quat, axis=1))
    l_orn = float(np.sum(np.arccos(np.clip(dots, -1.0, 1.0))))
    d_pose = _wrap_pi(sim_euler - ref.euler)
    l_pose = float(np.sum(joint_w[None, :] * d_pose * d_pose))

    def rates(e):
        r = np.zeros_like(e)
        if e.shape[0] >= 2:
            r[:-1] = _wrap_pi(e[1:] - e[:-1]) * fps
            r[-1] = r[-2]
        return r

    d_vel = rates(sim_euler) - rates(ref.euler)
    l_vel = float(np.sum(joint_w[None, :] * d_vel * d_vel))
    if sim_euler.shape[0] >= 3:
        acc = (_wrap_pi(sim_euler[2:] - sim_euler[1:-1])
               - _wrap_pi(sim_euler[1:-1] - sim_euler[:-2])) * fps * fps
        l_acc = float(np.sum(acc * acc))
    else:
        l_acc = 0.0
    l_feet = float(np.sum(np.abs(ref.foot_contact.astype(np.float64)
                                 - sim_foot_contact.astype(np.float64))))
    return (weights.com * l_com
            + weights.com_velocity * l_comv
            + weights.root_orientation * l_orn
            + weights.pose * l_pose
            + weights.pose_velocity * l_vel
            + weights.acceleration * l_acc
            + weights.feet * l_feet)


# ---------------------------------------------------------------------------
# Sequence-level optimization
# ---------------------------------------------------------------------------


@dataclass
class WindowTrace:
    start: int
    end: int
    gen_best: list[float]
    best_so_far: list[float]
    best_cost: float
    diverged_frame: int  # global frame index, -1 if clean


@dataclass
class OptimizedSequence:
    targets_q: np.ndarray        # (T, NQ) optimized kinematic targets
    targets_v: np.ndarray        # (T, NV)
    sim_qs: np.ndarray           # (T, NQ) stitched simulated states
    sim_vs: np.ndarray           # (T, NV)
    sim_com: np.ndarray          # (T, 3)
    sim_com_vel: np.ndarray      # (T, 3)
    foot_force: np.ndarray       # (T, n_feet, 3)
    foot_contact: np.ndarray     # (T, n_feet) bool
    nonfoot_contact: np.ndarray  # (T,) bool
    contact_pos: np.ndarray      # (T, C, 3)
    contact_force: np.ndarray    # (T, C, 3)
    contact_body: np.ndarray     # (T, C)
    contact_count: np.ndarray    # (T,)
    window_traces: list[WindowTrace]
    windows: list[tuple[int, int]]

    @property
    def all_windows_diverged(self) -> bool:
        return (bool(self.window_traces)
                and all(t.diverged_frame >= 0 for t in self.window_traces))

    @property
    def first_divergence(self) -> int:
        frames = [t.diverged_frame for t in self.window_traces if t.diverged_frame >= 0]
        return min(frames) if frames else -1


def plan_windows(T: int, plan: WindowPlan, fps: float) -> list[tuple[int, int]]:
    w = plan.frames_per_window(fps)
    adv = plan.advance_frames(fps)
    windows = []
    s = 0
    while True:
        windows.append((s, min(s + w, T)))
        if s + w >= T:
            break
        s += adv
    return windows


def optimize_sequence(traj: KinematicTrajectory, model: HumanoidModel,
                      plane: GroundPlane, plan: WindowPlan,
                      weights: CostWeights, seed: int,
                      ref_foot_contact: np.ndarray | None = None,
                      threads: int = 1,
                      sim_params: SimParams | None = None) -> OptimizedSequence:
    """Optimize all windows in a sliding fashion and stitch the results.

    ref_foot_contact: (T, n_feet) reference contact states from the input
    pose heuristics; zeros when unavailable.
    """
    sim = Simulation(model, plane, sim_params)
    mp = sim.mp
    cmap = ChannelMap.for_model(model)
    T = traj.num_frames
    fps = traj.fps
    nf = len(mp.foot_bodies)
    C = len(mp.contact_body)

    joint_w = expand_joint_weights(weights.joint_weights, cmap)
    if weights.joint_weights is None and traj.ankles_neutral:
        # unknown ankle orientation: no pose constraint during optimization
        joint_w[list(cmap.ankle_channels)] = 0.0

    if ref_foot_contact is None:
        ref_foot_contact = np.zeros((T, nf), dtype=bool)

    ref_euler = unwrap_channels(packed_to_channels(traj.qs, cmap))
    warn_if_gimbal(ref_euler, cmap.pitch_channels)
    ref_com = np.stack([sim.pose_com(traj.qs[t]) for t in range(T)])
    ref_com_vel = np.zeros_like(ref_com)
    ref_com_vel[:-1] = (ref_com[1:] - ref_com[:-1]) * fps
    ref_com_vel[-1] = ref_com_vel[-2]

    windows = plan_windows(T, plan, fps)

    target_euler = ref_euler.copy()
    out = OptimizedSequence(
        targets_q=traj.qs.copy(), targets_v=traj.vs.copy(),
        sim_qs=np.zeros((T, mp.nq)), sim_vs=np.zeros((T, mp.nv)),
        sim_com=np.zeros((T, 3)), sim_com_vel=np.zeros((T, 3)),
        foot_force=np.zeros((T, nf, 3)),
        foot_contact=np.zeros((T, nf), dtype=bool),
        nonfoot_contact=np.zeros(T, dtype=bool),
        contact_pos=np.zeros((T, C, 3)), contact_force=np.zeros((T, C, 3)),
        contact_body=np.zeros((T, C), dtype=np.int64),
        contact_count=np.zeros(T, dtype=np.int64),
        window_traces=[], windows=windows)

    state = sim.make_state(traj.qs[0], traj.vs[0])
    out.sim_qs[0] = traj.qs[0]
    out.sim_vs[0] = traj.vs[0]
    out.sim_com[0] = sim.pose_com(traj.qs[0])
    out.sim_com_vel[0] = sim.compute_com_velocity(state)

    executor = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    parallel_map = executor.map if executor is not None else None
    adv = plan.advance_frames(fps)

    try:
        for widx, (s, e) in enumerate(windows):
            frames = np.arange(s + 1, e)
            F = frames.size
            times = frames / fps
            spline0 = fit_spline(times, target_euler[frames], plan.knot_spacing_s)
            x0 = spline0.control.ravel().copy()

            ref_win = WindowReference(
                com=ref_com[frames], com_vel=ref_com_vel[frames],
                root_quat=traj.qs[frames][:, 3:7], euler=ref_euler[frames],
                foot_contact=ref_foot_contact[frames])
            root_rows = traj.qs[frames]
            state0 = state.copy()

            def run_candidate(x):
                chans = spline0.with_control(x).evaluate(times)
                tq = channels_to_packed(chans, root_rows, cmap, mp)
                tv = packed_velocities(tq, fps, mp)
                return sim.rollout(state0, tq, tv)

            def objective(x):
                res = run_candidate(x)
                if res.diverged:
                    remaining = (F - res.diverged_frame) / max(F, 1)
                    return plan.divergence_penalty * (1.0 + remaining)
                return assemble_cost(
                    ref_win, res.com, res.com_vel, res.qs[:, 3:7],
                    packed_to_channels(res.qs, cmap), res.foot_contact,
                    weights, joint_w, fps)

            best_x, best_cost, hist = cmaes_minimize(
                objective, x0, plan.sigma0, plan.population, plan.iterations,
                seed + widx, parallel_map=parallel_map)
            accepted = run_candidate(best_x)

            chans = spline0.with_control(best_x).evaluate(times)
            target_euler[frames] = chans
            out.targets_q[frames] = channels_to_packed(chans, root_rows, cmap, mp)
            _stitch(out, accepted, frames)

            div_global = (int(frames[accepted.diverged_frame])
                          if accepted.diverged else -1)
            out.window_traces.append(WindowTrace(
                start=s, end=e, gen_best=hist.gen_best,
                best_so_far=hist.best_so_far, best_cost=float(best_cost),
                diverged_frame=div_global))
            if accepted.diverged:
                log.warning("window %d [%d, %d) diverged at frame %d",
                            widx, s, e, div_global)

            if widx + 1 < len(windows):
                nxt = windows[widx + 1][0]
                snap = nxt - (s + 1)
                if accepted.diverged and accepted.diverged_frame <= snap:
                    # reseed from the kinematic reference past the divergence
                    state = sim.make_state(traj.qs[nxt], traj.vs[nxt])
                else:
                    state = sim.state_at_frame(accepted, snap)
    finally:
        if executor is not None:
            executor.shutdown()

    out.targets_v = packed_velocities(out.targets_q, fps, mp)
    return out


def _stitch(out: OptimizedSequence, res: RolloutResult, frames: np.ndarray) -> None:
    upto = res.num_frames if not res.diverged else res.diverged_frame
    idx = frames[:upto]
    out.sim_qs[idx] = res.qs[:upto]
    out.sim_vs[idx] = res.vs[:upto]
    out.sim_com[idx] = res.com[:upto]
    out.sim_com_vel[idx] = res.com_vel[:upto]
    out.foot_force[idx] = res.foot_force[:upto]
    out.foot_contact[idx] = res.foot_contact[:upto]
    out.nonfoot_contact[idx] = res.nonfoot_contact[:upto]
    out.contact_pos[idx] = res.contact_pos[:upto]
    out.contact_force[idx] = res.contact_force[:upto]
    out.contact_body[idx] = res.contact_body[:upto]
    out.contact_count[idx] = res.contact_count[:upto]
