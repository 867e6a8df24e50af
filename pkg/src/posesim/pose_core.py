"""Canonical pose-sequence data model, preprocessing, and contact heuristics.

World frame is +Z up, units are meters and seconds throughout. Adapters are
responsible for converting external data into this convention.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import ndimage

from .errors import DegenerateGeometryError, SchemaError

POSE_SCHEMA_VERSION = 1

# Contact heuristics on input poses: a foot joint is in contact when it is
# closer than 5 cm to the plane and moving slower than 2 cm/s.
CONTACT_HEIGHT_M = 0.05
CONTACT_SPEED_MPS = 0.02
# Ground height is the mean of the lowest floor(5% * T) pooled joint samples.
GROUND_LOWEST_FRACTION = 0.05
GROUND_MIN_FRAMES = 20

FOOT_JOINT_NAMES = frozenset(
    {
        "left_ankle",
        "right_ankle",
        "left_toe",
        "right_toe",
        "left_big_toe",
        "right_big_toe",
        "left_small_toe",
        "right_small_toe",
        "left_heel",
        "right_heel",
    }
)

H36M17_JOINTS = [
    "pelvis",
    "right_hip",
    "right_knee",
    "right_ankle",
    "left_hip",
    "left_knee",
    "left_ankle",
    "spine",
    "thorax",
    "neck",
    "head",
    "left_shoulder",
    "left_elbow",
    "left_wrist",
    "right_shoulder",
    "right_elbow",
    "right_wrist",
]
H36M17_PARENTS = [-1, 0, 1, 2, 0, 4, 5, 0, 7, 8, 9, 8, 11, 12, 8, 14, 15]

NPC16_JOINTS = [n for n in H36M17_JOINTS if n != "spine"]
NPC16_PARENTS = [-1, 0, 1, 2, 0, 4, 5, 0, 7, 8, 7, 10, 11, 7, 13, 14]

# The 23 wholebody detection joints plus pelvis/thorax/neck, which the
# converter synthesizes from hip and shoulder midpoints so that the kinematic
# tree can root at the pelvis.
BASE23_JOINTS = [
    "pelvis",
    "thorax",
    "neck",
    "nose",
    "left_eye",
    "right_eye",
    "left_ear",
    "right_ear",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
    "left_hip",
    "right_hip",
    "left_knee",
    "right_knee",
    "left_ankle",
    "right_ankle",
    "left_big_toe",
    "left_small_toe",
    "left_heel",
    "right_big_toe",
    "right_small_toe",
    "right_heel",
]
BASE23_PARENTS = [
    -1, 0, 1, 2, 3, 3, 4, 5, 1, 1, 8, 9, 10, 11,
    0, 0, 14, 15, 16, 17, 18, 18, 18, 19, 19, 19,
]

_FORMAT_REGISTRY = {
    "H36M17": (H36M17_JOINTS, H36M17_PARENTS),
    "NPC16": (NPC16_JOINTS, NPC16_PARENTS),
    "BASE23": (BASE23_JOINTS, BASE23_PARENTS),
}


@dataclass(frozen=True)
class Skeleton:
    format_id: str
    joint_names: tuple[str, ...]
    parent_index: tuple[int, ...]

    def __post_init__(self):
        names = tuple(self.joint_names)
        parents = tuple(int(p) for p in self.parent_index)
        object.__setattr__(self, "joint_names", names)
        object.__setattr__(self, "parent_index", parents)
        if len(names) != len(parents):
            raise SchemaError("joint_names and parent_index lengths differ")
        if len(set(names)) != len(names):
            raise SchemaError("duplicate joint names")
        roots = [i for i, p in enumerate(parents) if p < 0]
        if len(roots) != 1:
            raise SchemaError(f"skeleton must have exactly one root, got {len(roots)}")
        for i, p in enumerate(parents):
            if p >= len(names) or p == i:
                raise SchemaError(f"invalid parent index {p} for joint {names[i]}")
        # every joint must reach the root (tree, no cycles)
        for i in range(len(names)):
            seen = 0
            j = i
            while parents[j] >= 0:
                j = parents[j]
                seen += 1
                if seen > len(names):
                    raise SchemaError(f"parent cycle involving joint {names[i]}")
        if self.format_id in _FORMAT_REGISTRY and names[roots[0]] != "pelvis":
            raise SchemaError(f"{self.format_id} skeleton must be rooted at pelvis")

    @classmethod
    def from_format(cls, format_id: str) -> "Skeleton":
        if format_id not in _FORMAT_REGISTRY:
            raise SchemaError(f"unknown skeleton format {format_id!r}")
        names, parents = _FORMAT_REGISTRY[format_id]
        return cls(format_id, tuple(names), tuple(parents))

    @property
    def num_joints(self) -> int:
        return len(self.joint_names)

    @property
    def root_index(self) -> int:
        return self.parent_index.index(-1)

    @property
    def bones(self) -> list[tuple[int, int]]:
        return [(p, i) for i, p in enumerate(self.parent_index) if p >= 0]

    def index_of(self, name: str) -> int:
        try:
            return self.joint_names.index(name)
        except ValueError:
            raise SchemaError(f"skeleton has no joint named {name!r}") from None

    def has_joint(self, name: str) -> bool:
        return name in self.joint_names

    def foot_joint_indices(self) -> list[int]:
        return [i for i, n in enumerate(self.joint_names) if n in FOOT_JOINT_NAMES]

    def topological_order(self) -> list[int]:
        order, todo = [], [self.root_index]
        children = [[] for _ in self.joint_names]
        for i, p in enumerate(self.parent_index):
            if p >= 0:
                children[p].append(i)
        while todo:
            j = todo.pop(0)
            order.append(j)
            todo.extend(children[j])
        return order


@dataclass(frozen=True)
class PoseSequence:
    skeleton: Skeleton
    fps: float
    frames: np.ndarray  # (T, J, 3) meters, +Z up
    cameras: tuple[np.ndarray, ...] | None = None  # each (3, 4) pixels

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim != 3 or frames.shape[2] != 3:
            raise SchemaError(f"frames must be (T, J, 3), got {frames.shape}")
        if frames.shape[0] < 2:
            raise SchemaError("pose sequence needs at least 2 frames")
        if frames.shape[1] != self.skeleton.num_joints:
            raise SchemaError(
                f"frames have {frames.shape[1]} joints, skeleton has {self.skeleton.num_joints}"
            )
        if not np.isfinite(frames).all():
            raise SchemaError("non-finite joint positions")
        if not (self.fps > 0):
            raise SchemaError("fps must be positive")
        object.__setattr__(self, "frames", frames)
        if self.cameras is not None:
            cams = tuple(np.asarray(c, dtype=np.float64) for c in self.cameras)
            for c in cams:
                if c.shape != (3, 4):
                    raise SchemaError(f"camera matrix must be 3x4, got {c.shape}")
            object.__setattr__(self, "cameras", cams)

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]

    def joint(self, name: str) -> np.ndarray:
        return self.frames[:, self.skeleton.index_of(name), :]

    def with_frames(self, frames: np.ndarray) -> "PoseSequence":
        return replace(self, frames=frames)


@dataclass(frozen=True)
class GroundPlane:
    height: float
    normal: tuple[float, float, float] = (0.0, 0.0, 1.0)
    low_confidence: bool = False

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=np.float64)
        if abs(np.linalg.norm(n) - 1.0) > 1e-9:
            raise ValueError("plane normal must be unit length")


@dataclass(frozen=True)
class ContactStates:
    joint_indices: tuple[int, ...]
    flags: np.ndarray  # (T, len(joint_indices)) bool

    def __post_init__(self):
        flags = np.asarray(self.flags, dtype=bool)
        if flags.ndim != 2 or flags.shape[1] != len(self.joint_indices):
            raise ValueError("contact flags must be (T, num_foot_joints)")
        object.__setattr__(self, "flags", flags)


def median_filter(seq: PoseSequence, window: int) -> PoseSequence:
    """Per-joint, per-coordinate temporal median filter with edge replication."""
    if window < 1 or window % 2 == 0:
        raise ValueError(f"median window must be odd and >= 1, got {window}")
    if window > seq.num_frames:
        raise ValueError(
            f"median window {window} exceeds sequence length {seq.num_frames}"
        )
    if window == 1:
        return seq
    filtered = ndimage.median_filter(seq.frames, size=(window, 1, 1), mode="nearest")
    return seq.with_frames(filtered)


def constrain_bone_lengths(seq: PoseSequence) -> PoseSequence:
    """Rescale every bone to its sequence-mean length, preserving directions.

    Children are repositioned root-to-leaf along each input frame's bone
    direction, so accumulated corrections propagate down the tree and the
    root stays put.
    """
    skel = seq.skeleton
    frames = seq.frames
    bones = skel.bones
    lengths = {
        (p, c): float(np.mean(np.linalg.norm(frames[:, c] - frames[:, p], axis=1)))
        for p, c in bones
    }
    out = frames.copy()
    order = skel.topological_order()
    parent = skel.parent_index
    for j in order:
        p = parent[j]
        if p < 0:
            continue
        direction = frames[:, j] - frames[:, p]
        norms = np.linalg.norm(direction, axis=1)
        bad = np.nonzero(norms < 1e-12)[0]
        if bad.size:
            raise DegenerateGeometryError(
                f"zero-length bone {skel.joint_names[p]}->{skel.joint_names[j]} "
                f"at frame {int(bad[0])}"
            )
        out[:, j] = out[:, p] + direction / norms[:, None] * lengths[(p, j)]
    return seq.with_frames(out)


def estimate_ground_plane(seq: PoseSequence) -> GroundPlane:
    """Plane height from the mean of the lowest ~5% pooled joint heights."""
    T = seq.num_frames
    heights = seq.frames[:, :, 2].ravel()
    low_confidence = T < GROUND_MIN_FRAMES
    k = 1 if low_confidence else max(1, math.floor(GROUND_LOWEST_FRACTION * T))
    lowest = np.partition(heights, k - 1)[:k]
    return GroundPlane(height=float(np.mean(lowest)), low_confidence=low_confidence)


def joint_speeds(frames: np.ndarray, fps: float) -> np.ndarray:
    """First-order forward-difference speeds; last frame copies the previous."""
    vel = np.empty_like(frames)
    vel[:-1] = (frames[1:] - frames[:-1]) * fps
    vel[-1] = vel[-2]
    return np.linalg.norm(vel, axis=-1)


def estimate_contact_states(seq: PoseSequence, plane: GroundPlane,
                            height_threshold: float = CONTACT_HEIGHT_M,
                            speed_threshold: float = CONTACT_SPEED_MPS,
                            ) -> ContactStates:
    """Foot-joint contact flags from the height and speed thresholds."""
    idx = seq.skeleton.foot_joint_indices()
    if not idx:
        raise SchemaError("skeleton exposes no foot joints (ankles/toes/heels)")
    pts = seq.frames[:, idx, :]
    above = pts[:, :, 2] - plane.height
    speeds = joint_speeds(pts, seq.fps)
    flags = (above < height_threshold) & (speeds < speed_threshold)
    return ContactStates(joint_indices=tuple(idx), flags=flags)


# ---------------------------------------------------------------------------
# Canonical pose file I/O (schema documented in docs/file_formats.md)
# ---------------------------------------------------------------------------


def pose_to_dict(seq: PoseSequence) -> dict:
    doc = {
        "schema_version": POSE_SCHEMA_VERSION,
        "format_id": seq.skeleton.format_id,
        "fps": float(seq.fps),
        "joint_names": list(seq.skeleton.joint_names),
        "parent_index": list(seq.skeleton.parent_index),
        "num_frames": seq.num_frames,
        "frames": [float(v) for v in seq.frames.ravel()],
    }
    if seq.cameras is not None:
        doc["cameras"] = [[[float(v) for v in row] for row in c] for c in seq.cameras]
    return doc


def pose_from_dict(doc: dict) -> PoseSequence:
    for key in ("schema_version", "format_id", "fps", "joint_names", "parent_index",
                "num_frames", "frames"):
        if key not in doc:
            raise SchemaError(f"pose file missing field {key!r}")
    if doc["schema_version"] != POSE_SCHEMA_VERSION:
        raise SchemaError(f"unsupported pose schema_version {doc['schema_version']}")
    fmt = doc["format_id"]
    names = [str(n) for n in doc["joint_names"]]
    parents = [int(p) for p in doc["parent_index"]]
    if fmt in _FORMAT_REGISTRY:
        ref_names, ref_parents = _FORMAT_REGISTRY[fmt]
        if names != ref_names or parents != ref_parents:
            raise SchemaError(f"joint layout does not match format {fmt}")
    skel = Skeleton(fmt, tuple(names), tuple(parents))
    T = int(doc["num_frames"])
    J = skel.num_joints
    flat = np.asarray(doc["frames"], dtype=np.float64)
    if flat.size != T * J * 3:
        raise SchemaError(
            f"frames has {flat.size} values, expected {T}*{J}*3 = {T * J * 3}"
        )
    cams = None
    if doc.get("cameras") is not None:
        cams = tuple(np.asarray(c, dtype=np.float64) for c in doc["cameras"])
    return PoseSequence(skel, float(doc["fps"]), flat.reshape(T, J, 3), cams)


def save_pose_file(seq: PoseSequence, path: str) -> None:
    write_json_atomic(pose_to_dict(seq), path)


def load_pose_file(path: str) -> PoseSequence:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: pose file must be a JSON object")
    return pose_from_dict(doc)


def write_json_atomic(doc: dict, path: str) -> None:
    """Serialize deterministically and rename into place."""
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")
    os.replace(tmp, path)
