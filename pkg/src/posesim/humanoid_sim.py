"""Deterministic fixed-step simulation of the humanoid with PD tracking."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import sim_core
from .errors import SimulationDiverged
from .humanoid import JOINT_FREE, JOINT_SPHERICAL, HumanoidModel, pack_model
from .pose_core import GroundPlane

FIXED_DT = 1.0e-3          # simulator runs at 1 kHz
TARGET_HZ = 25.0           # kinematic targets update at 25 Hz
STEPS_PER_TARGET = 40      # 1000 / 25
GRAVITY = 9.81


@dataclass(frozen=True)
class SimParams:
    """Contact/control constants. Defaults are config-exposed, not tuned per run."""

    contact_stiffness: float = 3.0e4   # N/m
    contact_damping: float = 1.0e3     # N*s/m
    friction_mu: float = 0.9
    friction_damping: float = 1.0e4    # N*s/m, viscous part below the Coulomb cap
    contact_height_eps: float = 5.0e-4  # simulated foot-contact threshold, meters
    stable_pd: bool = True

    def to_dict(self) -> dict:
        return {
            "contact_stiffness": self.contact_stiffness,
            "contact_damping": self.contact_damping,
            "friction_mu": self.friction_mu,
            "friction_damping": self.friction_damping,
            "contact_height_eps": self.contact_height_eps,
            "stable_pd": self.stable_pd,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SimParams":
        return cls(**{k: doc[k] for k in cls().to_dict() if k in doc})


@dataclass(frozen=True)
class ContactPoint:
    body: str
    position: np.ndarray      # world, on the contact surface
    normal_force: float       # N, >= 0
    lateral_force: np.ndarray  # (2,) N in the plane


@dataclass
class SimState:
    q: np.ndarray
    v: np.ndarray
    time: float = 0.0
    contacts: list = field(default_factory=list)
    foot_forces: np.ndarray | None = None  # (n_feet, 3) accumulated N

    def copy(self) -> "SimState":
        return SimState(self.q.copy(), self.v.copy(), self.time,
                        list(self.contacts),
                        None if self.foot_forces is None else self.foot_forces.copy())


@dataclass
class RolloutResult:
    """Per-target-frame snapshots of a PD-tracking rollout."""

    times: np.ndarray          # (F,)
    qs: np.ndarray             # (F, NQ)
    vs: np.ndarray             # (F, NV)
    com: np.ndarray            # (F, 3)
    com_vel: np.ndarray        # (F, 3)
    foot_force: np.ndarray     # (F, n_feet, 3) mean force vector over the interval
    foot_contact: np.ndarray   # (F, n_feet) bool, at snapshot time
    nonfoot_contact: np.ndarray  # (F,) bool, any non-foot contact in the interval
    contact_pos: np.ndarray    # (F, C, 3)
    contact_force: np.ndarray  # (F, C, 3) lateral xy + normal z
    contact_body: np.ndarray   # (F, C)
    contact_count: np.ndarray  # (F,)
    diverged_frame: int        # -1 if the whole window simulated cleanly

    @property
    def num_frames(self) -> int:
        return self.qs.shape[0]

    @property
    def diverged(self) -> bool:
        return self.diverged_frame >= 0


class Simulation:
    """Owns a model + plane + constants; states are explicit and immutable-ish.

    One instance per rollout is cheap: the packed model is shared read-only.
    """

    def __init__(self, model: HumanoidModel, plane: GroundPlane,
                 params: SimParams | None = None):
        self.model = model
        self.plane = plane
        self.params = params or SimParams()
        self.mp = pack_model(model)
        self._names = [l.name for l in model.links]

    # -- state construction -------------------------------------------------

    def zero_pose_q(self) -> np.ndarray:
        q = np.zeros(self.mp.nq)
        q[3] = 1.0
        for i, l in enumerate(self.model.links):
            if self.mp.jtype[i] == JOINT_SPHERICAL:
                q[self.mp.q_off[i]] = 1.0
        return q

    def standing_state(self, xy=(0.0, 0.0)) -> SimState:
        """Zero pose translated so the soles rest exactly on the plane."""
        q = self.zero_pose_q()
        R, o, c = sim_core.fk_pass(self.mp, q)
        low = np.inf
        for k in range(len(self.mp.contact_body)):
            b = self.mp.contact_body[k]
            x = o[b] + R[b] @ self.mp.contact_pos[k]
            low = min(low, x[2] - self.mp.contact_radius[k])
        q[0], q[1] = xy
        q[2] = self.plane.height - low
        return self.make_state(q, np.zeros(self.mp.nv))

    def make_state(self, q: np.ndarray, v: np.ndarray, time: float = 0.0) -> SimState:
        q = np.asarray(q, dtype=np.float64).copy()
        v = np.asarray(v, dtype=np.float64).copy()
        if q.shape != (self.mp.nq,) or v.shape != (self.mp.nv,):
            raise ValueError(
                f"state must have q({self.mp.nq}), v({self.mp.nv}); "
                f"got {q.shape}, {v.shape}"
            )
        nf = len(self.mp.foot_bodies)
        return SimState(q, v, time, [], np.zeros((nf, 3)))

    # -- kinematic queries ---------------------------------------------------

    def body_frames(self, q: np.ndarray):
        return sim_core.fk_pass(self.mp, np.asarray(q, dtype=np.float64))

    def marker_positions(self, q: np.ndarray) -> dict[str, np.ndarray]:
        R, o, c = self.body_frames(q)
        out = {}
        for i, l in enumerate(self.model.links):
            for name, local in l.markers.items():
                out[name] = o[i] + R[i] @ np.asarray(local)
        return out

    def pose_com(self, q: np.ndarray) -> np.ndarray:
        R, o, c = self.body_frames(q)
        return sim_core.com_of(self.mp, c)

    def compute_com(self, state: SimState) -> np.ndarray:
        return self.pose_com(state.q)

    def compute_com_velocity(self, state: SimState) -> np.ndarray:
        R, o, c = self.body_frames(state.q)
        w, vo, vc, wj = sim_core.velocity_pass(self.mp, state.q, state.v, R, o, c)
        return sim_core.com_velocity_of(self.mp, vc)

    def foot_contact_flags(self, state: SimState) -> np.ndarray:
        R, o, c = self.body_frames(state.q)
        return sim_core.foot_contact_flags(
            self.mp, R, o, self.plane.height, self.params.contact_height_eps
        ).astype(bool)

    def geometric_contacts(self, q: np.ndarray, eps: float | None = None):
        """Contact-sphere surface points within eps of the plane.

        Returns (points (K, 3), body_index (K,), is_foot (K,)). Used for
        base-of-support hulls, where proximity counts as contact even when
        the penalty force is zero.
        """
        if eps is None:
            eps = self.params.contact_height_eps
        R, o, c = self.body_frames(q)
        pts, bodies, feet = [], [], []
        for k in range(len(self.mp.contact_body)):
            b = int(self.mp.contact_body[k])
            x = o[b] + R[b] @ self.mp.contact_pos[k]
            low = x[2] - self.mp.contact_radius[k]
            if low - self.plane.height < eps:
                pts.append(np.array([x[0], x[1], low]))
                bodies.append(b)
                feet.append(bool(self.mp.is_foot[b]))
        if not pts:
            return np.zeros((0, 3)), np.zeros(0, dtype=int), np.zeros(0, dtype=bool)
        return np.stack(pts), np.asarray(bodies), np.asarray(feet)

    # -- control -------------------------------------------------------------

    def stable_pd_torques(self, state: SimState, target_q: np.ndarray,
                          target_v: np.ndarray, stable: bool | None = None) -> np.ndarray:
        target_q = np.asarray(target_q, dtype=np.float64)
        target_v = np.asarray(target_v, dtype=np.float64)
        if target_q.shape != (self.mp.nq,) or target_v.shape != (self.mp.nv,):
            raise ValueError(
                f"targets must be q({self.mp.nq}), v({self.mp.nv}); "
                f"got {target_q.shape}, {target_v.shape}"
            )
        use_stable = self.params.stable_pd if stable is None else stable
        return sim_core.pd_torques(self.mp, state.q, state.v, target_q, target_v,
                                   FIXED_DT, use_stable)

    # -- stepping ------------------------------------------------------------

    def implicit_damping_diag(self) -> np.ndarray:
        """dt * kd on every actuated DOF: the implicit half of stable PD."""
        diag = np.zeros(self.mp.nv)
        for i in range(len(self.mp.parent)):
            if self.mp.jtype[i] == JOINT_FREE:
                continue
            vi = self.mp.v_off[i]
            ndof = 3 if self.mp.jtype[i] == JOINT_SPHERICAL else 1
            diag[vi:vi + ndof] = FIXED_DT * self.mp.kd[i]
        return diag

    def step(self, state: SimState, torques: np.ndarray, dt: float = FIXED_DT) -> SimState:
        """One fixed 1 kHz step under the given generalized torques.

        In stable-PD mode the solve carries the implicit -dt*kd*accel term of
        the controller; with stable_pd off this is plain forward dynamics.
        """
        if abs(dt - FIXED_DT) > 1e-12:
            raise ValueError(f"step size is fixed at {FIXED_DT}, got {dt}")
        torques = np.asarray(torques, dtype=np.float64)
        if torques.shape != (self.mp.nv,):
            raise ValueError(f"torques must have shape ({self.mp.nv},)")
        new = state.copy()
        p = self.params
        imp = self.implicit_damping_diag() if p.stable_pd else np.zeros(self.mp.nv)
        cpos, cforce, cbody, ccnt, ok = sim_core.dynamics_step(
            self.mp, new.q, new.v, torques, self.plane.height, dt, -GRAVITY,
            p.contact_stiffness, p.contact_damping, p.friction_mu,
            p.friction_damping, imp)
        if not ok:
            bad = "state"
            if not np.isfinite(new.q).all():
                bad = "positions"
            elif not np.isfinite(new.v).all():
                bad = "velocities"
            raise SimulationDiverged(
                f"simulation diverged at t={state.time:.4f}s ({bad} non-finite "
                "or above the velocity guard)", quantity=bad)
        new.time = state.time + dt
        new.contacts = self._contact_points(cpos, cforce, cbody, ccnt)
        for k in range(ccnt):
            for fi, fb in enumerate(self.mp.foot_bodies):
                if cbody[k] == fb:
                    new.foot_forces[fi] += cforce[k]
        return new

    def _contact_points(self, cpos, cforce, cbody, ccnt) -> list[ContactPoint]:
        pts = []
        for k in range(ccnt):
            pts.append(ContactPoint(
                body=self._names[int(cbody[k])],
                position=cpos[k].copy(),
                normal_force=float(cforce[k, 2]),
                lateral_force=cforce[k, :2].copy(),
            ))
        return pts

    # -- rollout ---------------------------------------------------------------

    def rollout(self, state: SimState, targets_q: np.ndarray, targets_v: np.ndarray,
                start_time: float | None = None) -> RolloutResult:
        """Track targets at 25 Hz (40 steps each); never raises on divergence."""
        targets_q = np.ascontiguousarray(targets_q, dtype=np.float64)
        targets_v = np.ascontiguousarray(targets_v, dtype=np.float64)
        if targets_q.ndim != 2 or targets_q.shape[1] != self.mp.nq:
            raise ValueError(f"targets_q must be (F, {self.mp.nq})")
        if targets_v.shape != (targets_q.shape[0], self.mp.nv):
            raise ValueError(f"targets_v must be (F, {self.mp.nv})")
        F = targets_q.shape[0]
        nf = len(self.mp.foot_bodies)
        C = len(self.mp.contact_body)
        out_q = np.zeros((F, self.mp.nq))
        out_v = np.zeros((F, self.mp.nv))
        out_com = np.zeros((F, 3))
        out_comv = np.zeros((F, 3))
        out_ff = np.zeros((F, nf, 3))
        out_fc = np.zeros((F, nf), dtype=np.int64)
        out_nonfoot = np.zeros(F, dtype=np.int64)
        out_cpos = np.zeros((F, C, 3))
        out_cforce = np.zeros((F, C, 3))
        out_cbody = np.zeros((F, C), dtype=np.int64)
        out_ccnt = np.zeros(F, dtype=np.int64)

        work = state.copy()
        p = self.params
        diverged = -1
        if F > 0:
            diverged = sim_core.rollout_kernel(
                self.mp, work.q, work.v, targets_q, targets_v, self.plane.height,
                FIXED_DT, -GRAVITY, p.contact_stiffness, p.contact_damping,
                p.friction_mu, p.friction_damping, p.contact_height_eps,
                STEPS_PER_TARGET, p.stable_pd,
                out_q, out_v, out_com, out_comv, out_ff, out_fc, out_nonfoot,
                out_cpos, out_cforce, out_cbody, out_ccnt)
            diverged = int(diverged)
        t0 = state.time if start_time is None else start_time
        times = t0 + (np.arange(F) + 1) * (1.0 / TARGET_HZ)
        return RolloutResult(
            times=times, qs=out_q, vs=out_v, com=out_com, com_vel=out_comv,
            foot_force=out_ff, foot_contact=out_fc.astype(bool),
            nonfoot_contact=out_nonfoot.astype(bool),
            contact_pos=out_cpos, contact_force=out_cforce,
            contact_body=out_cbody, contact_count=out_ccnt,
            diverged_frame=diverged)

    def state_at_frame(self, result: RolloutResult, frame: int) -> SimState:
        """Rebuild a SimState from a rollout snapshot (to seed the next window)."""
        return self.make_state(result.qs[frame], result.vs[frame],
                               time=float(result.times[frame]))

    def frame_contacts(self, result: RolloutResult, frame: int) -> list[ContactPoint]:
        return self._contact_points(
            result.contact_pos[frame], result.contact_force[frame],
            result.contact_body[frame], int(result.contact_count[frame]))


def contact_force_series(result: RolloutResult, mp) -> np.ndarray:
    """(F, n_feet) force magnitudes: norm of the summed contact force vectors
    over each foot's contact points at each snapshot."""
    F = result.num_frames
    nf = len(mp.foot_bodies)
    out = np.zeros((F, nf))
    for f in range(F):
        for fi, fb in enumerate(mp.foot_bodies):
            total = np.zeros(3)
            for k in range(int(result.contact_count[f])):
                if result.contact_body[f, k] == fb:
                    total += result.contact_force[f, k]
            out[f, fi] = np.linalg.norm(total)
    return out
