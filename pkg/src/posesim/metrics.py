"""Plausibility metrics: simulation-based (CoM distance, pose stability
duration) and kinematic/physics checks (footskate, ground penetration,
MPJPE family), plus the report container and its serialization."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import SchemaError
from .pose_core import ContactStates, GroundPlane, PoseSequence, write_json_atomic

REPORT_SCHEMA_VERSION = 1

STATIONARY_SPEED_MPS = 0.25   # |com velocity| below this marks a frame stationary
FOOTSKATE_DISP_M = 0.02       # in-contact horizontal displacement threshold
HULL_TOL = 1e-9


# ---------------------------------------------------------------------------
# 2D convex hull (monotone chain) and containment
# ---------------------------------------------------------------------------


def convex_hull(points: np.ndarray) -> np.ndarray:
    """Counter-clockwise hull of (N, 2) points; degenerate inputs collapse to
    the distinct point/segment set."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if pts.shape[0] == 0:
        return pts.copy()
    uniq = np.unique(pts, axis=0)  # sorts lexicographically
    if uniq.shape[0] <= 2:
        return uniq

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower = []
    for p in uniq:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper = []
    for p in uniq[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.asarray(lower[:-1] + upper[:-1])


def _point_segment_distance(p, a, b):
    ab = b - a
    denom = float(ab @ ab)
    if denom < 1e-30:
        return float(np.linalg.norm(p - a))
    t = float(np.clip((p - a) @ ab / denom, 0.0, 1.0))
    return float(np.linalg.norm(p - (a + t * ab)))


def point_in_hull(hull: np.ndarray, point, tol: float = HULL_TOL) -> bool:
    """Containment with the boundary counted as inside (tolerance tol)."""
    hull = np.asarray(hull, dtype=np.float64).reshape(-1, 2)
    p = np.asarray(point, dtype=np.float64).reshape(2)
    if hull.shape[0] == 0:
        return False
    if hull.shape[0] == 1:
        return float(np.linalg.norm(p - hull[0])) <= tol
    if hull.shape[0] == 2:
        return _point_segment_distance(p, hull[0], hull[1]) <= tol
    for i in range(hull.shape[0]):
        a = hull[i]
        b = hull[(i + 1) % hull.shape[0]]
        cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
        if cross < -tol:
            return False
    return True


def base_of_support(contact_points: np.ndarray, plane: GroundPlane) -> np.ndarray:
    """Hull of contact points projected onto the ground plane (world xy)."""
    pts = np.asarray(contact_points, dtype=np.float64)
    if pts.size == 0:
        return np.zeros((0, 2))
    return convex_hull(pts.reshape(-1, 3)[:, :2])


def cog_inside(hull: np.ndarray, cog_xy) -> bool:
    return point_in_hull(hull, cog_xy)


# ---------------------------------------------------------------------------
# Simulation-based metrics
# ---------------------------------------------------------------------------


def com_distance(kinematic_com: np.ndarray, simulated_com: np.ndarray) -> float:
    """Mean per-frame L2 distance between CoM trajectories, millimeters."""
    a = np.asarray(kinematic_com, dtype=np.float64)
    b = np.asarray(simulated_com, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 2 or a.shape[1] != 3:
        raise ValueError(f"CoM series must both be (T, 3); got {a.shape}, {b.shape}")
    return float(np.mean(np.linalg.norm(a - b, axis=1)) * 1000.0)


def pose_stability_duration(sim_cog_xy: np.ndarray, hulls: list[np.ndarray],
                            kinematic_com_vel: np.ndarray,
                            nonfoot_contact: np.ndarray,
                            stationary_speed: float = STATIONARY_SPEED_MPS,
                            ) -> tuple[int, int, int]:
    """(PSD_T, N, t_F) = (min(T - N, t_F), balance violations, fall frame).

    N counts stationary frames (reference CoM speed below the threshold)
    whose simulated CoG falls outside the base of support; t_F is the first
    frame with any non-foot ground contact, or T if none.
    """
    T = len(hulls)
    speeds = np.linalg.norm(np.asarray(kinematic_com_vel, dtype=np.float64),
                            axis=1)
    if speeds.shape[0] != T or np.asarray(sim_cog_xy).shape[0] != T:
        raise ValueError("series lengths disagree")
    N = 0
    for t in range(T):
        if speeds[t] < stationary_speed and not point_in_hull(hulls[t], sim_cog_xy[t]):
            N += 1
    nonfoot = np.asarray(nonfoot_contact, dtype=bool)
    hits = np.nonzero(nonfoot)[0]
    t_f = int(hits[0]) if hits.size else T
    return min(T - N, t_f), N, t_f


# ---------------------------------------------------------------------------
# Kinematic metrics on pose sequences
# ---------------------------------------------------------------------------


def footskate(seq: PoseSequence, contacts: ContactStates,
              displacement_threshold: float = FOOTSKATE_DISP_M) -> float:
    """Percent of frames where an in-contact foot joint translates more than
    2 cm horizontally since the previous frame."""
    flags = contacts.flags
    if flags.shape[0] != seq.num_frames:
        raise ValueError("contact flags not aligned with the sequence")
    pts = seq.frames[:, list(contacts.joint_indices), :2]
    disp = np.zeros(flags.shape)
    disp[1:] = np.linalg.norm(pts[1:] - pts[:-1], axis=2)
    skate = flags & (disp > displacement_threshold)
    skate[0] = False
    return float(100.0 * np.mean(np.any(skate, axis=1)))


def ground_penetration(seq: PoseSequence, plane: GroundPlane) -> float:
    """Mean depth below the plane over penetrating (frame, joint) samples, mm."""
    depth = plane.height - seq.frames[:, :, 2]
    below = depth > 0.0
    if not below.any():
        return 0.0
    return float(depth[below].mean() * 1000.0)


def mpjpe_family(pred: PoseSequence, gt: PoseSequence,
                 cameras=None) -> tuple[float, float, float | None]:
    """(MPJPE mm, MPJPE-G mm, MPJPE-2D px or None) over mutual joints."""
    mutual = [n for n in pred.skeleton.joint_names if gt.skeleton.has_joint(n)]
    if not mutual:
        raise SchemaError("skeletons share no joints")
    if pred.num_frames != gt.num_frames:
        raise ValueError("sequences must have equal length")
    pi = [pred.skeleton.index_of(n) for n in mutual]
    gi = [gt.skeleton.index_of(n) for n in mutual]
    p = pred.frames[:, pi, :]
    g = gt.frames[:, gi, :]

    mpjpe_g = float(np.mean(np.linalg.norm(p - g, axis=2)) * 1000.0)

    p_rel = p - pred.frames[:, [pred.skeleton.root_index], :]
    g_rel = g - gt.frames[:, [gt.skeleton.root_index], :]
    mpjpe = float(np.mean(np.linalg.norm(p_rel - g_rel, axis=2)) * 1000.0)

    cams = cameras if cameras is not None else pred.cameras or gt.cameras
    mpjpe_2d = None
    if cams:
        errs = []
        for cam in cams:
            errs.append(np.linalg.norm(_project(p, cam) - _project(g, cam), axis=2))
        mpjpe_2d = float(np.mean(np.stack(errs)))
    return mpjpe, mpjpe_g, mpjpe_2d


def _project(pts: np.ndarray, cam: np.ndarray) -> np.ndarray:
    cam = np.asarray(cam, dtype=np.float64)
    homo = np.concatenate([pts, np.ones(pts.shape[:2] + (1,))], axis=2)
    proj = homo @ cam.T
    return proj[..., :2] / proj[..., 2:3]


# ---------------------------------------------------------------------------
# Report
# ---------------------------------------------------------------------------


@dataclass
class PlausibilityReport:
    num_frames: int
    footskate_pct: float
    ground_penetration_mm: float
    cd_mm: float | None = None
    psd: int | None = None
    psd_n: int | None = None
    psd_t_f: int | None = None
    mpjpe_mm: float | None = None
    mpjpe_g_mm: float | None = None
    mpjpe_2d_px: float | None = None
    window_traces: list = field(default_factory=list)
    contact_force_series: list = field(default_factory=list)  # per frame [left, right]
    diverged: bool = False
    divergence_frame: int = -1
    config_echo: dict = field(default_factory=dict)
    low_confidence_flags: list = field(default_factory=list)

    def __post_init__(self):
        if not (0.0 <= self.footskate_pct <= 100.0):
            raise ValueError("footskate percent out of [0, 100]")
        if self.ground_penetration_mm < 0.0:
            raise ValueError("ground penetration must be >= 0")
        if self.psd is not None and not (0 <= self.psd <= self.num_frames):
            raise ValueError("PSD out of [0, T]")
        for name in ("cd_mm", "mpjpe_mm", "mpjpe_g_mm", "mpjpe_2d_px"):
            v = getattr(self, name)
            if v is not None and not np.isfinite(v):
                raise ValueError(f"{name} must be finite")

    def to_dict(self) -> dict:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "num_frames": self.num_frames,
            "footskate_pct": self.footskate_pct,
            "ground_penetration_mm": self.ground_penetration_mm,
            "cd_mm": self.cd_mm,
            "psd": self.psd,
            "psd_n": self.psd_n,
            "psd_t_f": self.psd_t_f,
            "mpjpe_mm": self.mpjpe_mm,
            "mpjpe_g_mm": self.mpjpe_g_mm,
            "mpjpe_2d_px": self.mpjpe_2d_px,
            "window_traces": self.window_traces,
            "contact_force_series": self.contact_force_series,
            "diverged": self.diverged,
            "divergence_frame": self.divergence_frame,
            "config_echo": self.config_echo,
            "low_confidence_flags": self.low_confidence_flags,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PlausibilityReport":
        if doc.get("schema_version") != REPORT_SCHEMA_VERSION:
            raise SchemaError(
                f"unsupported report schema_version {doc.get('schema_version')}")
        kw = {k: doc[k] for k in (
            "num_frames", "footskate_pct", "ground_penetration_mm", "cd_mm",
            "psd", "psd_n", "psd_t_f", "mpjpe_mm", "mpjpe_g_mm", "mpjpe_2d_px",
            "window_traces", "contact_force_series", "diverged",
            "divergence_frame", "config_echo", "low_confidence_flags")}
        return cls(**kw)

    def save(self, path: str) -> None:
        write_json_atomic(self.to_dict(), path)


CSV_COLUMNS = [
    "sequence", "num_frames", "cd_mm", "psd", "psd_n", "psd_t_f",
    "footskate_pct", "ground_penetration_mm", "mpjpe_mm", "mpjpe_g_mm",
    "mpjpe_2d_px", "diverged", "low_confidence",
]


def report_csv_row(name: str, report: PlausibilityReport) -> dict:
    return {
        "sequence": name,
        "num_frames": report.num_frames,
        "cd_mm": report.cd_mm,
        "psd": report.psd,
        "psd_n": report.psd_n,
        "psd_t_f": report.psd_t_f,
        "footskate_pct": report.footskate_pct,
        "ground_penetration_mm": report.ground_penetration_mm,
        "mpjpe_mm": report.mpjpe_mm,
        "mpjpe_g_mm": report.mpjpe_g_mm,
        "mpjpe_2d_px": report.mpjpe_2d_px,
        "diverged": report.diverged,
        "low_confidence": ";".join(report.low_confidence_flags),
    }


def csv_summary(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: ("" if row.get(k) is None else row.get(k))
                         for k in CSV_COLUMNS})
    return buf.getvalue()
