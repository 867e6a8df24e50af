"""Humanoid body definition: links, joints, gains, collision geometry.

The default body has a free-floating pelvis, 8 spherical joints (chest, neck,
shoulders, hips, ankles) and 4 revolute joints (elbows, knees): 28 controllable
DOF across 12 controllable joints. Masses follow standard anthropometric
segment fractions for a 72 kg adult; inertia comes from the collision geometry
at uniform density.
"""

from __future__ import annotations

import json
import math
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np

from .errors import SchemaError
from .pose_core import write_json_atomic

MODEL_SCHEMA_VERSION = 1

JOINT_FREE = 0
JOINT_SPHERICAL = 1
JOINT_REVOLUTE = 2

_JOINT_TYPE_NAMES = {"free": JOINT_FREE, "spherical": JOINT_SPHERICAL,
                     "revolute": JOINT_REVOLUTE}
_JOINT_TYPE_IDS = {v: k for k, v in _JOINT_TYPE_NAMES.items()}


@dataclass(frozen=True)
class Joint:
    type: str  # free | spherical | revolute
    origin: tuple[float, float, float]  # in parent link frame
    axis: tuple[float, float, float] = (0.0, 0.0, 1.0)  # revolute only, child frame
    kp: float = 0.0
    kd: float = 0.0
    torque_limit: float = 0.0
    lower: float = -math.pi
    upper: float = math.pi


@dataclass(frozen=True)
class Collision:
    type: str  # capsule | box
    # capsule: p0/p1 endpoints + radius; box: p0 = center, half = half-extents
    p0: tuple[float, float, float]
    p1: tuple[float, float, float] = (0.0, 0.0, 0.0)
    radius: float = 0.0
    half: tuple[float, float, float] = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class Link:
    name: str
    parent: str | None
    joint: Joint
    mass: float
    com: tuple[float, float, float]
    inertia: np.ndarray  # 3x3 at com, link frame
    collision: Collision
    markers: dict[str, tuple[float, float, float]] = field(default_factory=dict)
    is_foot: bool = False


@dataclass(frozen=True)
class HumanoidModel:
    name: str
    links: tuple[Link, ...]

    def __post_init__(self):
        names = [l.name for l in self.links]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate link names")
        roots = [l for l in self.links if l.parent is None]
        if len(roots) != 1 or roots[0].joint.type != "free":
            raise SchemaError("model needs exactly one free-root link")
        if self.links[0].parent is not None:
            raise SchemaError("root link must come first")
        counts = {"spherical": 0, "revolute": 0}
        for l in self.links:
            if l.parent is not None:
                if l.parent not in names or names.index(l.parent) >= names.index(l.name):
                    raise SchemaError(f"link {l.name} parent must precede it")
                counts[l.joint.type] = counts.get(l.joint.type, 0) + 1
            if l.mass <= 0:
                raise SchemaError(f"link {l.name} must have positive mass")
            I = np.asarray(l.inertia)
            if not np.allclose(I, I.T, atol=1e-12) or np.linalg.eigvalsh(I).min() <= 0:
                raise SchemaError(f"link {l.name} inertia must be symmetric positive-definite")
        if counts.get("spherical") != 8 or counts.get("revolute") != 4:
            raise SchemaError(
                "humanoid requires 8 spherical + 4 revolute joints, got "
                f"{counts.get('spherical')}+{counts.get('revolute')}"
            )
        if not any(l.is_foot for l in self.links):
            raise SchemaError("no links flagged as feet")

    @property
    def total_mass(self) -> float:
        return float(sum(l.mass for l in self.links))

    @property
    def num_links(self) -> int:
        return len(self.links)

    def link_index(self, name: str) -> int:
        for i, l in enumerate(self.links):
            if l.name == name:
                return i
        raise SchemaError(f"no link named {name!r}")

    def controllable_links(self) -> list[int]:
        return [i for i, l in enumerate(self.links) if l.parent is not None]

    def marker_world_zero(self) -> dict[str, np.ndarray]:
        """World marker positions in the zero pose with the root at origin."""
        pos = {}
        origin = {}
        for l in self.links:
            base = origin[l.parent] if l.parent is not None else np.zeros(3)
            o = base + np.asarray(l.joint.origin)
            origin[l.name] = o
            for mname, mpos in l.markers.items():
                pos[mname] = o + np.asarray(mpos)
        return pos


# ---------------------------------------------------------------------------
# Inertia from geometry at uniform density
# ---------------------------------------------------------------------------


def capsule_inertia(mass: float, p0, p1, radius: float) -> tuple[np.ndarray, np.ndarray]:
    """Inertia tensor at the capsule center for an axis-aligned capsule."""
    p0 = np.asarray(p0, dtype=np.float64)
    p1 = np.asarray(p1, dtype=np.float64)
    L = float(np.linalg.norm(p1 - p0))
    r = radius
    v_cyl = math.pi * r * r * L
    v_sph = 4.0 / 3.0 * math.pi * r ** 3
    m_cyl = mass * v_cyl / (v_cyl + v_sph)
    m_sph = mass - m_cyl
    i_axial = 0.5 * m_cyl * r * r + 0.4 * m_sph * r * r
    i_perp = (m_cyl * (L * L / 12.0 + r * r / 4.0)
              + m_sph * (0.4 * r * r + L * L / 4.0 + 3.0 * L * r / 8.0))
    axis = (p1 - p0) / L if L > 0 else np.array([0.0, 0.0, 1.0])
    I = np.eye(3) * i_perp
    I += (i_axial - i_perp) * np.outer(axis, axis)
    center = 0.5 * (p0 + p1)
    return I, center


def box_inertia(mass: float, half) -> np.ndarray:
    hx, hy, hz = (2.0 * h for h in half)  # full extents
    return np.diag([
        mass / 12.0 * (hy * hy + hz * hz),
        mass / 12.0 * (hx * hx + hz * hz),
        mass / 12.0 * (hx * hx + hy * hy),
    ])


# ---------------------------------------------------------------------------
# Default body
# ---------------------------------------------------------------------------

TOTAL_MASS_KG = 72.0

# mass fractions of total body mass (head includes neck, forearm includes hand)
_SEGMENT_FRACTIONS = {
    "pelvis": 0.1117,
    "chest": 0.3229,
    "head": 0.0694,
    "upper_arm": 0.0271,
    "forearm": 0.0223,
    "thigh": 0.1416,
    "shin": 0.0433,
    "foot": 0.0137,
}

_DEFAULT_GAINS = {
    # kp, torque limit; kd = kp / 10
    "chest": (500.0, 100.0),
    "neck": (200.0, 100.0),
    "shoulder": (400.0, 100.0),
    "elbow": (200.0, 100.0),
    "hip": (500.0, 200.0),
    "knee": (500.0, 200.0),
    # ankle stiffness acts in series with the penalty-contact compliance of
    # the sole; below ~900 the quiet-standing pendulum mode is unstable
    "ankle": (900.0, 200.0),
}


def _capsule_link(name, parent, joint, frac, p0, p1, radius, markers=None,
                  is_foot=False):
    mass = TOTAL_MASS_KG * frac
    I, center = capsule_inertia(mass, p0, p1, radius)
    return Link(
        name=name, parent=parent, joint=joint, mass=mass,
        com=tuple(center), inertia=I,
        collision=Collision("capsule", tuple(p0), tuple(p1), radius),
        markers=markers or {}, is_foot=is_foot,
    )


def default_model() -> HumanoidModel:
    """The standard 28-DOF body used by all experiments unless overridden."""
    g = _DEFAULT_GAINS

    def j(kind, origin, axis=(0.0, 0.0, 1.0), gains=None, lower=-math.pi, upper=math.pi):
        kp, tl = g[gains]
        return Joint(kind, tuple(origin), tuple(axis), kp=kp, kd=kp / 10.0,
                     torque_limit=tl, lower=lower, upper=upper)

    links = [
        _capsule_link(
            "pelvis", None,
            Joint("free", (0.0, 0.0, 0.0)),
            _SEGMENT_FRACTIONS["pelvis"],
            (0.0, -0.06, 0.0), (0.0, 0.06, 0.0), 0.095,
            markers={"pelvis": (0.0, 0.0, 0.0)},
        ),
        _capsule_link(
            "chest", "pelvis", j("spherical", (0.0, 0.0, 0.12), gains="chest"),
            _SEGMENT_FRACTIONS["chest"],
            (0.0, 0.0, 0.02), (0.0, 0.0, 0.20), 0.11,
            markers={"thorax": (0.0, 0.0, 0.0)},
        ),
        _capsule_link(
            "head", "chest", j("spherical", (0.0, 0.0, 0.25), gains="neck"),
            _SEGMENT_FRACTIONS["head"],
            (0.0, 0.0, 0.03), (0.0, 0.0, 0.15), 0.09,
            markers={"neck": (0.0, 0.0, 0.0), "head": (0.0, 0.0, 0.15)},
        ),
        _capsule_link(
            "left_upper_arm", "chest",
            j("spherical", (0.0, 0.18, 0.21), gains="shoulder"),
            _SEGMENT_FRACTIONS["upper_arm"],
            (0.0, 0.03, 0.0), (0.0, 0.25, 0.0), 0.045,
            markers={"left_shoulder": (0.0, 0.0, 0.0)},
        ),
        _capsule_link(
            "left_forearm", "left_upper_arm",
            j("revolute", (0.0, 0.28, 0.0), axis=(0.0, 0.0, -1.0), gains="elbow",
              lower=0.0, upper=2.7),
            _SEGMENT_FRACTIONS["forearm"],
            (0.0, 0.02, 0.0), (0.0, 0.24, 0.0), 0.04,
            markers={"left_elbow": (0.0, 0.0, 0.0), "left_wrist": (0.0, 0.26, 0.0)},
        ),
        _capsule_link(
            "right_upper_arm", "chest",
            j("spherical", (0.0, -0.18, 0.21), gains="shoulder"),
            _SEGMENT_FRACTIONS["upper_arm"],
            (0.0, -0.03, 0.0), (0.0, -0.25, 0.0), 0.045,
            markers={"right_shoulder": (0.0, 0.0, 0.0)},
        ),
        _capsule_link(
            "right_forearm", "right_upper_arm",
            j("revolute", (0.0, -0.28, 0.0), axis=(0.0, 0.0, 1.0), gains="elbow",
              lower=0.0, upper=2.7),
            _SEGMENT_FRACTIONS["forearm"],
            (0.0, -0.02, 0.0), (0.0, -0.24, 0.0), 0.04,
            markers={"right_elbow": (0.0, 0.0, 0.0), "right_wrist": (0.0, -0.26, 0.0)},
        ),
        _capsule_link(
            "left_thigh", "pelvis",
            j("spherical", (0.0, 0.09, -0.07), gains="hip"),
            _SEGMENT_FRACTIONS["thigh"],
            (0.0, 0.0, -0.04), (0.0, 0.0, -0.38), 0.07,
            markers={"left_hip": (0.0, 0.0, 0.0)},
        ),
        _capsule_link(
            "left_shin", "left_thigh",
            j("revolute", (0.0, 0.0, -0.42), axis=(0.0, 1.0, 0.0), gains="knee",
              lower=0.0, upper=2.6),
            _SEGMENT_FRACTIONS["shin"],
            (0.0, 0.0, -0.04), (0.0, 0.0, -0.38), 0.05,
            markers={"left_knee": (0.0, 0.0, 0.0)},
        ),
        _foot_link("left_foot", "left_shin", j("spherical", (0.0, 0.0, -0.42),
                                               gains="ankle")),
        _capsule_link(
            "right_thigh", "pelvis",
            j("spherical", (0.0, -0.09, -0.07), gains="hip"),
            _SEGMENT_FRACTIONS["thigh"],
            (0.0, 0.0, -0.04), (0.0, 0.0, -0.38), 0.07,
            markers={"right_hip": (0.0, 0.0, 0.0)},
        ),
        _capsule_link(
            "right_shin", "right_thigh",
            j("revolute", (0.0, 0.0, -0.42), axis=(0.0, 1.0, 0.0), gains="knee",
              lower=0.0, upper=2.6),
            _SEGMENT_FRACTIONS["shin"],
            (0.0, 0.0, -0.04), (0.0, 0.0, -0.38), 0.05,
            markers={"right_knee": (0.0, 0.0, 0.0)},
        ),
        _foot_link("right_foot", "right_shin", j("spherical", (0.0, 0.0, -0.42),
                                                 gains="ankle")),
    ]
    return HumanoidModel("default-28dof", tuple(links))


def _foot_link(name, parent, joint):
    # box nearly centered under the ankle: balanced heel/toe levers keep
    # quiet standing statically recoverable in both directions
    side = "left" if name.startswith("left") else "right"
    mass = TOTAL_MASS_KG * _SEGMENT_FRACTIONS["foot"]
    center = (0.0, 0.0, -0.045)
    half = (0.11, 0.045, 0.025)
    return Link(
        name=name, parent=parent, joint=joint, mass=mass,
        com=center, inertia=box_inertia(mass, half),
        collision=Collision("box", center, half=half),
        markers={
            f"{side}_ankle": (0.0, 0.0, 0.0),
            f"{side}_heel": (-0.11, 0.0, -0.07),
            f"{side}_toe": (0.11, 0.0, -0.07),
        },
        is_foot=True,
    )


# ---------------------------------------------------------------------------
# Packed arrays consumed by the numba kernels
# ---------------------------------------------------------------------------

ModelArrays = namedtuple(
    "ModelArrays",
    [
        "parent", "jtype", "jpos", "axis", "mass", "com", "inertia",
        "kp", "kd", "tlim", "jlo", "jhi",
        "q_off", "v_off", "nq", "nv",
        "is_foot", "contact_body", "contact_pos", "contact_radius",
        "foot_bodies",  # [left, right]
    ],
)


def pack_model(model: HumanoidModel) -> ModelArrays:
    return pack_links(model.links)


def pack_links(model_links) -> ModelArrays:
    links = tuple(model_links)
    nb = len(links)
    parent = np.empty(nb, dtype=np.int64)
    jtype = np.empty(nb, dtype=np.int64)
    jpos = np.zeros((nb, 3))
    axis = np.zeros((nb, 3))
    mass = np.empty(nb)
    com = np.empty((nb, 3))
    inertia = np.empty((nb, 3, 3))
    kp = np.zeros(nb)
    kd = np.zeros(nb)
    tlim = np.zeros(nb)
    jlo = np.full(nb, -math.pi)
    jhi = np.full(nb, math.pi)
    q_off = np.zeros(nb, dtype=np.int64)
    v_off = np.zeros(nb, dtype=np.int64)
    is_foot = np.zeros(nb, dtype=np.bool_)

    names = [l.name for l in links]
    iq, iv = 0, 0
    for i, l in enumerate(links):
        parent[i] = -1 if l.parent is None else names.index(l.parent)
        jtype[i] = _JOINT_TYPE_NAMES[l.joint.type]
        jpos[i] = l.joint.origin
        axis[i] = l.joint.axis
        mass[i] = l.mass
        com[i] = l.com
        inertia[i] = l.inertia
        kp[i], kd[i], tlim[i] = l.joint.kp, l.joint.kd, l.joint.torque_limit
        jlo[i], jhi[i] = l.joint.lower, l.joint.upper
        is_foot[i] = l.is_foot
        q_off[i], v_off[i] = iq, iv
        if jtype[i] == JOINT_FREE:
            iq += 7
            iv += 6
        elif jtype[i] == JOINT_SPHERICAL:
            iq += 4
            iv += 3
        else:
            iq += 1
            iv += 1

    cbody, cpos, crad = [], [], []
    for i, l in enumerate(links):
        c = l.collision
        if c.type == "capsule":
            for p in (c.p0, c.p1):
                cbody.append(i)
                cpos.append(p)
                crad.append(c.radius)
        elif c.type == "box":
            cx, cy, cz = c.p0
            hx, hy, hz = c.half
            for sx in (-1, 1):
                for sy in (-1, 1):
                    for sz in (-1, 1):
                        cbody.append(i)
                        cpos.append((cx + sx * hx, cy + sy * hy, cz + sz * hz))
                        crad.append(0.0)
        else:
            raise SchemaError(f"unknown collision type {c.type!r}")

    feet = [i for i, l in enumerate(links) if l.is_foot]
    left = [i for i in feet if links[i].name.startswith("left")]
    right = [i for i in feet if links[i].name.startswith("right")]
    foot_bodies = np.array((left + right) or feet, dtype=np.int64)

    return ModelArrays(
        parent=parent, jtype=jtype, jpos=jpos, axis=axis, mass=mass, com=com,
        inertia=inertia, kp=kp, kd=kd, tlim=tlim, jlo=jlo, jhi=jhi,
        q_off=q_off, v_off=v_off, nq=iq, nv=iv,
        is_foot=is_foot,
        contact_body=np.asarray(cbody, dtype=np.int64),
        contact_pos=np.asarray(cpos, dtype=np.float64),
        contact_radius=np.asarray(crad, dtype=np.float64),
        foot_bodies=foot_bodies,
    )


# ---------------------------------------------------------------------------
# Model file I/O
# ---------------------------------------------------------------------------


def model_to_dict(model: HumanoidModel) -> dict:
    links = []
    for l in model.links:
        links.append({
            "name": l.name,
            "parent": l.parent,
            "joint": {
                "type": l.joint.type,
                "origin": list(l.joint.origin),
                "axis": list(l.joint.axis),
                "kp": l.joint.kp,
                "kd": l.joint.kd,
                "torque_limit": l.joint.torque_limit,
                "lower": l.joint.lower,
                "upper": l.joint.upper,
            },
            "mass": l.mass,
            "com": list(l.com),
            "inertia": [list(row) for row in np.asarray(l.inertia)],
            "collision": {
                "type": l.collision.type,
                "p0": list(l.collision.p0),
                "p1": list(l.collision.p1),
                "radius": l.collision.radius,
                "half": list(l.collision.half),
            },
            "markers": {k: list(v) for k, v in l.markers.items()},
            "is_foot": l.is_foot,
        })
    return {"schema_version": MODEL_SCHEMA_VERSION, "name": model.name,
            "links": links}


def model_from_dict(doc: dict) -> HumanoidModel:
    if doc.get("schema_version") != MODEL_SCHEMA_VERSION:
        raise SchemaError(f"unsupported model schema_version {doc.get('schema_version')}")
    links = []
    for d in doc.get("links", []):
        try:
            jd = d["joint"]
            links.append(Link(
                name=d["name"],
                parent=d["parent"],
                joint=Joint(jd["type"], tuple(jd["origin"]), tuple(jd["axis"]),
                            jd["kp"], jd["kd"], jd["torque_limit"],
                            jd["lower"], jd["upper"]),
                mass=float(d["mass"]),
                com=tuple(d["com"]),
                inertia=np.asarray(d["inertia"], dtype=np.float64),
                collision=Collision(d["collision"]["type"],
                                    tuple(d["collision"]["p0"]),
                                    tuple(d["collision"]["p1"]),
                                    float(d["collision"]["radius"]),
                                    tuple(d["collision"]["half"])),
                markers={k: tuple(v) for k, v in d.get("markers", {}).items()},
                is_foot=bool(d.get("is_foot", False)),
            ))
        except KeyError as exc:
            raise SchemaError(f"model link missing field {exc}") from exc
    return HumanoidModel(doc.get("name", "unnamed"), tuple(links))


def save_model_file(model: HumanoidModel, path: str) -> None:
    write_json_atomic(model_to_dict(model), path)


def load_model_file(path: str) -> HumanoidModel:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
    return model_from_dict(doc)
