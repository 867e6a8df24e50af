"""End-to-end orchestration: load, preprocess, simulate/optimize, report.

Metric conventions: MPJPE family compares the raw input against ground truth;
footskate, ground penetration, the estimated plane, and contact states use the
preprocessed sequence (median filter + bone-length constraint), which is also
what the simulation tracks.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass

import numpy as np

from . import humanoid_sim, metrics, pose_core
from .config import ANKLE_SOLE_CLEARANCE_M, RunConfig
from .humanoid import HumanoidModel, default_model, load_model_file
from .humanoid_sim import Simulation
from .kinematics import has_foot_orientation, initialize_kinematics
from .pose_core import (
    ContactStates,
    GroundPlane,
    PoseSequence,
    load_pose_file,
    write_json_atomic,
)
from .traj_opt import OptimizedSequence, optimize_sequence

log = logging.getLogger(__name__)

TRAJECTORY_SCHEMA_VERSION = 1


@dataclass
class SequenceArtifacts:
    name: str
    report: metrics.PlausibilityReport
    out_dir: str


def _load_model(config: RunConfig) -> HumanoidModel:
    return load_model_file(config.model) if config.model else default_model()


def _load_cameras(config: RunConfig):
    if config.cameras is None:
        return None
    with open(config.cameras) as fh:
        doc = json.load(fh)
    cams = doc.get("cameras", doc) if isinstance(doc, dict) else doc
    return tuple(np.asarray(c, dtype=np.float64) for c in cams)


def preprocess(seq: PoseSequence, median_window: int) -> PoseSequence:
    w = min(median_window, seq.num_frames)
    if w % 2 == 0:
        w -= 1
    if w < median_window:
        log.info("median window reduced to %d for a %d-frame sequence",
                 w, seq.num_frames)
    smoothed = pose_core.median_filter(seq, max(w, 1))
    return pose_core.constrain_bone_lengths(smoothed)


def sim_plane_for(seq: PoseSequence, plane: GroundPlane,
                  config: RunConfig) -> GroundPlane:
    """Simulation plane: estimated plane lowered by the ankle clearance when
    the input skeleton's lowest joints are ankles rather than toes/heels."""
    offset = config.sim_plane_offset
    if offset == "auto":
        offset = 0.0 if has_foot_orientation(seq.skeleton) else ANKLE_SOLE_CLEARANCE_M
    return GroundPlane(plane.height - float(offset),
                       low_confidence=plane.low_confidence)


def foot_contact_reference(seq: PoseSequence, contacts: ContactStates,
                           n_feet: int = 2) -> np.ndarray:
    """(T, 2) per-foot (left, right) any-joint contact reduction."""
    names = [seq.skeleton.joint_names[i] for i in contacts.joint_indices]
    out = np.zeros((seq.num_frames, n_feet), dtype=bool)
    for col, name in enumerate(names):
        side = 0 if name.startswith("left") else 1
        out[:, side] |= contacts.flags[:, col]
    return out


def kinematic_metrics(raw: PoseSequence, pre: PoseSequence, config: RunConfig,
                      gt: PoseSequence | None, cameras):
    """Plane, contacts, FS, GP, MPJPE triple, low-confidence flags."""
    plane = pose_core.estimate_ground_plane(pre)
    contacts = pose_core.estimate_contact_states(
        pre, plane, config.thresholds.contact_height,
        config.thresholds.contact_speed)
    fs = metrics.footskate(pre, contacts, config.thresholds.footskate_displacement)
    gp = metrics.ground_penetration(pre, plane)
    flags = []
    if plane.low_confidence:
        flags.append("ground_plane_low_confidence")
    mpjpe = mpjpe_g = mpjpe_2d = None
    if gt is not None:
        mpjpe, mpjpe_g, mpjpe_2d = metrics.mpjpe_family(raw, gt, cameras)
        if mpjpe_2d is None:
            flags.append("mpjpe_2d_unavailable_no_cameras")
    return plane, contacts, fs, gp, (mpjpe, mpjpe_g, mpjpe_2d), flags


def run_metrics_only(config: RunConfig) -> list[SequenceArtifacts]:
    """FS/GP (+MPJPE family with ground truth); no simulation."""
    config.validate_paths()
    gt = load_pose_file(config.ground_truth) if config.ground_truth else None
    cameras = _load_cameras(config)
    out = []
    rows = []
    for i, path in enumerate(config.inputs):
        raw = load_pose_file(path)
        pre = preprocess(raw, config.median_window)
        _, _, fs, gp, (mpjpe, mpjpe_g, mpjpe_2d), flags = kinematic_metrics(
            raw, pre, config, gt, cameras)
        report = metrics.PlausibilityReport(
            num_frames=raw.num_frames, footskate_pct=fs,
            ground_penetration_mm=gp, mpjpe_mm=mpjpe, mpjpe_g_mm=mpjpe_g,
            mpjpe_2d_px=mpjpe_2d, config_echo=config.echo(),
            low_confidence_flags=flags)
        name = _sequence_name(path)
        seq_dir = _sequence_dir(config, name, len(config.inputs))
        report.save(os.path.join(seq_dir, "report.json"))
        rows.append(metrics.report_csv_row(name, report))
        out.append(SequenceArtifacts(name, report, seq_dir))
    _write_summary(config, rows)
    return out


def run_evaluate(config: RunConfig) -> list[SequenceArtifacts]:
    """Full pipeline: preprocess, kinematic init, windowed optimization,
    simulation-based + kinematic metrics, artifacts on disk."""
    config.validate_paths()
    model = _load_model(config)
    gt = load_pose_file(config.ground_truth) if config.ground_truth else None
    cameras = _load_cameras(config)
    out = []
    rows = []
    for i, path in enumerate(config.inputs):
        name = _sequence_name(path)
        seq_dir = _sequence_dir(config, name, len(config.inputs))
        artifacts = _evaluate_one(config, model, path, gt, cameras,
                                  seed=config.seed + i, seq_dir=seq_dir,
                                  optimize=True)
        rows.append(metrics.report_csv_row(name, artifacts.report))
        out.append(artifacts)
    _write_summary(config, rows)
    return out


def run_simulate(config: RunConfig) -> list[SequenceArtifacts]:
    """Rollout tracking the raw kinematic reference; no optimization."""
    config.validate_paths()
    model = _load_model(config)
    gt = load_pose_file(config.ground_truth) if config.ground_truth else None
    cameras = _load_cameras(config)
    out = []
    rows = []
    for i, path in enumerate(config.inputs):
        name = _sequence_name(path)
        seq_dir = _sequence_dir(config, name, len(config.inputs))
        artifacts = _evaluate_one(config, model, path, gt, cameras,
                                  seed=config.seed + i, seq_dir=seq_dir,
                                  optimize=False)
        rows.append(metrics.report_csv_row(name, artifacts.report))
        out.append(artifacts)
    _write_summary(config, rows)
    return out


def _evaluate_one(config: RunConfig, model: HumanoidModel, path: str,
                  gt, cameras, seed: int, seq_dir: str,
                  optimize: bool) -> SequenceArtifacts:
    raw = load_pose_file(path)
    pre = preprocess(raw, config.median_window)
    plane, contacts, fs, gp, mpjpe3, flags = kinematic_metrics(
        raw, pre, config, gt, cameras)

    traj = initialize_kinematics(pre, model)
    sim_plane = sim_plane_for(pre, plane, config)
    ref_contact = foot_contact_reference(pre, contacts)
    T = traj.num_frames

    if optimize:
        opt = optimize_sequence(
            traj, model, sim_plane, config.optimizer, config.weights, seed,
            ref_foot_contact=ref_contact, threads=config.threads,
            sim_params=config.sim)
    else:
        opt = _track_reference(traj, model, sim_plane, config.sim)

    sim = Simulation(model, sim_plane, config.sim)
    ref_com = np.stack([sim.pose_com(traj.qs[t]) for t in range(T)])
    ref_com_vel = np.zeros_like(ref_com)
    ref_com_vel[:-1] = (ref_com[1:] - ref_com[:-1]) * traj.fps
    ref_com_vel[-1] = ref_com_vel[-2]

    cd = metrics.com_distance(ref_com, opt.sim_com)
    hulls = []
    nonfoot = opt.nonfoot_contact.copy()
    for t in range(T):
        pts, bodies, feet = sim.geometric_contacts(opt.sim_qs[t])
        hulls.append(metrics.base_of_support(pts[feet], sim_plane))
        if t == 0 and pts.size and (~feet).any():
            nonfoot[0] = True
    psd, n_unbalanced, t_f = metrics.pose_stability_duration(
        opt.sim_com[:, :2], hulls, ref_com_vel, nonfoot,
        config.thresholds.stationary_speed)

    force_series = _force_series(opt, sim)
    if opt.all_windows_diverged:
        flags = flags + ["all_windows_diverged"]

    report = metrics.PlausibilityReport(
        num_frames=T, footskate_pct=fs, ground_penetration_mm=gp,
        cd_mm=cd, psd=psd, psd_n=n_unbalanced, psd_t_f=t_f,
        mpjpe_mm=mpjpe3[0], mpjpe_g_mm=mpjpe3[1], mpjpe_2d_px=mpjpe3[2],
        window_traces=[{
            "start": tr.start, "end": tr.end, "best_cost": tr.best_cost,
            "gen_best": tr.gen_best, "best_so_far": tr.best_so_far,
            "diverged_frame": tr.diverged_frame,
        } for tr in opt.window_traces],
        contact_force_series=[[float(v) for v in row] for row in force_series],
        diverged=opt.first_divergence >= 0,
        divergence_frame=opt.first_divergence,
        config_echo=config.echo(), low_confidence_flags=flags)

    name = _sequence_name(path)
    report.save(os.path.join(seq_dir, "report.json"))
    _write_trajectory(os.path.join(seq_dir, "optimized_targets.json"),
                      opt.targets_q, traj.fps, "optimized kinematic targets")
    _write_trajectory(os.path.join(seq_dir, "sim_trajectory.json"),
                      opt.sim_qs, traj.fps, "simulated trajectory",
                      com=opt.sim_com)
    _write_force_csv(os.path.join(seq_dir, "contact_forces.csv"),
                     force_series, traj.fps)
    _write_cost_csv(os.path.join(seq_dir, "cost_traces.csv"), opt)
    return SequenceArtifacts(name, report, seq_dir)


def _track_reference(traj, model, sim_plane, sim_params) -> OptimizedSequence:
    """Plain rollout of the reference targets, packaged like an optimization
    result with empty traces (the `simulate` subcommand)."""
    sim = Simulation(model, sim_plane, sim_params)
    mp = sim.mp
    T = traj.num_frames
    state = sim.make_state(traj.qs[0], traj.vs[0])
    res = sim.rollout(state, traj.qs[1:], traj.vs[1:])
    nf = len(mp.foot_bodies)
    C = len(mp.contact_body)
    out = OptimizedSequence(
        targets_q=traj.qs.copy(), targets_v=traj.vs.copy(),
        sim_qs=np.zeros((T, mp.nq)), sim_vs=np.zeros((T, mp.nv)),
        sim_com=np.zeros((T, 3)), sim_com_vel=np.zeros((T, 3)),
        foot_force=np.zeros((T, nf, 3)), foot_contact=np.zeros((T, nf), dtype=bool),
        nonfoot_contact=np.zeros(T, dtype=bool),
        contact_pos=np.zeros((T, C, 3)), contact_force=np.zeros((T, C, 3)),
        contact_body=np.zeros((T, C), dtype=np.int64),
        contact_count=np.zeros(T, dtype=np.int64),
        window_traces=[], windows=[(0, T)])
    out.sim_qs[0] = traj.qs[0]
    out.sim_vs[0] = traj.vs[0]
    out.sim_com[0] = sim.pose_com(traj.qs[0])
    out.sim_com_vel[0] = sim.compute_com_velocity(state)
    frames = np.arange(1, T)
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
    if res.diverged:
        from .traj_opt import WindowTrace
        out.window_traces.append(WindowTrace(0, T, [], [], float("nan"),
                                             int(frames[res.diverged_frame])))
    return out


def _force_series(opt: OptimizedSequence, sim: Simulation) -> np.ndarray:
    """Per-frame per-foot force magnitude from the stitched contact records."""
    T = opt.sim_qs.shape[0]
    nf = len(sim.mp.foot_bodies)
    out = np.zeros((T, nf))
    for t in range(T):
        for fi, fb in enumerate(sim.mp.foot_bodies):
            total = np.zeros(3)
            for k in range(int(opt.contact_count[t])):
                if opt.contact_body[t, k] == fb:
                    total += opt.contact_force[t, k]
            out[t, fi] = np.linalg.norm(total)
    return out


def _sequence_name(path: str) -> str:
    return os.path.splitext(os.path.basename(path))[0]


def _sequence_dir(config: RunConfig, name: str, n_inputs: int) -> str:
    d = config.out_dir if n_inputs == 1 else os.path.join(config.out_dir, name)
    os.makedirs(d, exist_ok=True)
    return d


def _write_summary(config: RunConfig, rows: list[dict]) -> None:
    os.makedirs(config.out_dir, exist_ok=True)
    path = os.path.join(config.out_dir, "summary.csv")
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(metrics.csv_summary(rows))
    os.replace(tmp, path)


def _write_trajectory(path: str, qs: np.ndarray, fps: float, kind: str,
                      com: np.ndarray | None = None) -> None:
    doc = {
        "schema_version": TRAJECTORY_SCHEMA_VERSION,
        "kind": kind,
        "fps": fps,
        "num_frames": int(qs.shape[0]),
        "state_size": int(qs.shape[1]),
        "frames": [float(v) for v in qs.ravel()],
    }
    if com is not None:
        doc["com"] = [float(v) for v in com.ravel()]
    write_json_atomic(doc, path)


def _write_force_csv(path: str, series: np.ndarray, fps: float) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write("frame,time_s,left_foot_n,right_foot_n\n")
        for t in range(series.shape[0]):
            fh.write(f"{t},{t / fps},{series[t, 0]},{series[t, 1]}\n")
    os.replace(tmp, path)


def _write_cost_csv(path: str, opt: OptimizedSequence) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write("window,start,end,generation,gen_best,best_so_far\n")
        for w, tr in enumerate(opt.window_traces):
            for g, (gb, bsf) in enumerate(zip(tr.gen_best, tr.best_so_far)):
                fh.write(f"{w},{tr.start},{tr.end},{g},{gb},{bsf}\n")
    os.replace(tmp, path)


def validate_inputs(config: RunConfig) -> list[str]:
    """Schema-check every referenced file; returns human-readable findings."""
    config.validate_paths()
    findings = []
    for path in config.inputs:
        seq = load_pose_file(path)
        findings.append(f"{path}: OK ({seq.skeleton.format_id}, "
                        f"{seq.num_frames} frames at {seq.fps} fps)")
    if config.ground_truth:
        gt = load_pose_file(config.ground_truth)
        findings.append(f"{config.ground_truth}: OK ({gt.skeleton.format_id})")
    if config.model:
        model = load_model_file(config.model)
        findings.append(f"{config.model}: OK (model '{model.name}', "
                        f"{model.num_links} links)")
    return findings
