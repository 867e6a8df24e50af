"""Run configuration: file-based with CLI overrides."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from .errors import SchemaError
from .humanoid_sim import SimParams
from .traj_opt import CostWeights, WindowPlan

CONFIG_SCHEMA_VERSION = 1

# model ankle-joint height above the sole; used to drop the simulation plane
# below the joint-estimated plane for skeletons without toe/heel joints
ANKLE_SOLE_CLEARANCE_M = 0.07


@dataclass(frozen=True)
class Thresholds:
    stationary_speed: float = 0.25   # m/s, PSD stationary split
    contact_height: float = 0.05     # m, input contact heuristic
    contact_speed: float = 0.02      # m/s, input contact heuristic
    footskate_displacement: float = 0.02  # m

    def __post_init__(self):
        for name in ("stationary_speed", "contact_height", "contact_speed",
                     "footskate_displacement"):
            if not getattr(self, name) > 0:
                raise SchemaError(f"threshold {name} must be > 0")

    def to_dict(self) -> dict:
        return {
            "stationary_speed": self.stationary_speed,
            "contact_height": self.contact_height,
            "contact_speed": self.contact_speed,
            "footskate_displacement": self.footskate_displacement,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Thresholds":
        return cls(**{k: doc[k] for k in cls().to_dict() if k in doc})


@dataclass(frozen=True)
class RunConfig:
    inputs: tuple[str, ...]
    ground_truth: str | None = None
    cameras: str | None = None
    model: str | None = None           # humanoid model file; None = built-in
    out_dir: str = "out"
    seed: int = 0
    threads: int = 1
    median_window: int = 15
    sim_plane_offset: float | str = "auto"
    sim: SimParams = field(default_factory=SimParams)
    optimizer: WindowPlan = field(default_factory=WindowPlan)
    weights: CostWeights = field(default_factory=CostWeights)
    thresholds: Thresholds = field(default_factory=Thresholds)

    def __post_init__(self):
        if not self.inputs:
            raise SchemaError("config needs at least one input pose file")
        if self.threads < 1:
            raise SchemaError("threads must be >= 1")
        if self.median_window < 1 or self.median_window % 2 == 0:
            raise SchemaError("median_window must be odd and >= 1")
        if isinstance(self.sim_plane_offset, str) and self.sim_plane_offset != "auto":
            raise SchemaError("sim_plane_offset must be a number or 'auto'")

    def validate_paths(self) -> None:
        for path in self.inputs:
            if not os.path.isfile(path):
                raise SchemaError(f"input pose file not found: {path}")
        for path in (self.ground_truth, self.cameras, self.model):
            if path is not None and not os.path.isfile(path):
                raise SchemaError(f"referenced file not found: {path}")

    def echo(self) -> dict:
        """Run-defining parameters; excludes threads and paths so reports are
        byte-identical across thread counts and directory layouts."""
        return {
            "seed": self.seed,
            "median_window": self.median_window,
            "sim_plane_offset": self.sim_plane_offset,
            "sim": self.sim.to_dict(),
            "optimizer": self.optimizer.to_dict(),
            "weights": self.weights.to_dict(),
            "thresholds": self.thresholds.to_dict(),
        }


def config_from_dict(doc: dict, base_dir: str = ".") -> RunConfig:
    if doc.get("schema_version", CONFIG_SCHEMA_VERSION) != CONFIG_SCHEMA_VERSION:
        raise SchemaError(f"unsupported config schema_version {doc.get('schema_version')}")
    inputs = doc.get("input") or doc.get("inputs")
    if inputs is None:
        raise SchemaError("config missing 'input'")
    if isinstance(inputs, str):
        inputs = [inputs]

    def resolve(p):
        return p if p is None or os.path.isabs(p) else os.path.join(base_dir, p)

    return RunConfig(
        inputs=tuple(resolve(p) for p in inputs),
        ground_truth=resolve(doc.get("ground_truth")),
        cameras=resolve(doc.get("cameras")),
        model=resolve(doc.get("model")),
        out_dir=resolve(doc.get("out_dir", "out")),
        seed=int(doc.get("seed", 0)),
        threads=int(doc.get("threads", 1)),
        median_window=int(doc.get("median_window", 15)),
        sim_plane_offset=doc.get("sim_plane_offset", "auto"),
        sim=SimParams.from_dict(doc.get("sim", {})),
        optimizer=WindowPlan.from_dict(doc.get("optimizer", {})),
        weights=CostWeights.from_dict(doc.get("weights", {})),
        thresholds=Thresholds.from_dict(doc.get("thresholds", {})),
    )


def load_config(path: str, overrides: dict | None = None) -> RunConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise SchemaError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: config must be a JSON object")
    doc.update(overrides or {})
    return config_from_dict(doc, base_dir=os.path.dirname(os.path.abspath(path)))
