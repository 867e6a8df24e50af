import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from posesim.errors import SchemaError
from posesim.metrics import (
    PlausibilityReport,
    base_of_support,
    cog_inside,
    com_distance,
    convex_hull,
    csv_summary,
    footskate,
    ground_penetration,
    mpjpe_family,
    point_in_hull,
    pose_stability_duration,
    report_csv_row,
)
from posesim.pose_core import ContactStates, GroundPlane, PoseSequence, Skeleton

from .oracles import halfplane_contains, mpjpe_oracle


def flat_skeleton(J=4):
    names = tuple(["pelvis"] + [f"j{i}" for i in range(1, J)])
    return Skeleton("CUSTOM", names, tuple(range(-1, J - 1)))


# ---------------------------------------------------------------------------
# com_distance
# ---------------------------------------------------------------------------


def test_cd_identical_series_is_zero():
    a = np.random.default_rng(0).normal(size=(10, 3))
    assert com_distance(a, a) == 0.0


def test_cd_constant_offset_30mm():
    a = np.zeros((7, 3))
    b = a + np.array([0.03, 0, 0])
    assert np.isclose(com_distance(a, b), 30.0)


def test_cd_matches_norm_then_mean_oracle(rng):
    a = rng.normal(size=(10, 3))
    b = rng.normal(size=(10, 3))
    expected = np.mean([np.linalg.norm(a[t] - b[t]) for t in range(10)]) * 1000
    assert np.isclose(com_distance(a, b), expected, atol=1e-9)


def test_cd_symmetry_and_triangle(rng):
    a, b, c = (rng.normal(size=(8, 3)) for _ in range(3))
    assert com_distance(a, b) == com_distance(b, a)
    assert com_distance(a, c) <= com_distance(a, b) + com_distance(b, c) + 1e-12


def test_cd_length_mismatch_raises(rng):
    with pytest.raises(ValueError):
        com_distance(rng.normal(size=(5, 3)), rng.normal(size=(6, 3)))


# ---------------------------------------------------------------------------
# convex hull / containment
# ---------------------------------------------------------------------------


def test_hull_square_inside_outside():
    square = np.array([[0.1, 0.1], [-0.1, 0.1], [-0.1, -0.1], [0.1, -0.1]])
    hull = convex_hull(square)
    assert hull.shape[0] == 4
    assert point_in_hull(hull, [0.0, 0.0])
    assert point_in_hull(hull, [0.1, 0.0])  # boundary counts as inside
    assert not point_in_hull(hull, [0.2, 0.0])


def test_hull_is_counter_clockwise(rng):
    pts = rng.normal(size=(20, 2))
    hull = convex_hull(pts)
    n = hull.shape[0]
    area2 = sum(hull[i][0] * hull[(i + 1) % n][1] - hull[(i + 1) % n][0] * hull[i][1]
                for i in range(n))
    assert area2 > 0


def test_hull_degenerate_segment_and_point():
    seg = convex_hull(np.array([[0.0, 0.0], [1.0, 1.0], [0.5, 0.5]]))
    assert seg.shape[0] == 2
    assert point_in_hull(seg, [0.25, 0.25])
    assert not point_in_hull(seg, [0.25, 0.30])
    pt = convex_hull(np.array([[0.3, 0.4]]))
    assert point_in_hull(pt, [0.3, 0.4])
    assert not point_in_hull(pt, [0.31, 0.4])
    assert not point_in_hull(np.zeros((0, 2)), [0.0, 0.0])


@settings(max_examples=60)
@given(st.integers(0, 10 ** 6))
def test_containment_matches_halfplane_oracle(seed):
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(rng.integers(3, 12), 2))
    hull = convex_hull(pts)
    for _ in range(10):
        p = rng.normal(size=2) * 1.5
        assert point_in_hull(hull, p) == halfplane_contains(pts, p)


def test_base_of_support_projects_to_plane():
    contacts = np.array([[0.1, 0.2, 0.0], [-0.1, 0.2, 0.001], [0.0, -0.1, 0.0]])
    hull = base_of_support(contacts, GroundPlane(0.0))
    assert hull.shape[1] == 2
    assert cog_inside(hull, [0.0, 0.1])


# ---------------------------------------------------------------------------
# pose_stability_duration
# ---------------------------------------------------------------------------


def square_hull():
    return convex_hull(np.array([[0.1, 0.1], [-0.1, 0.1], [-0.1, -0.1], [0.1, -0.1]]))


def test_psd_balanced_static_stand():
    T = 100
    hulls = [square_hull()] * T
    cog = np.zeros((T, 2))
    comv = np.zeros((T, 3))
    nonfoot = np.zeros(T, dtype=bool)
    psd, n, t_f = pose_stability_duration(cog, hulls, comv, nonfoot)
    assert (psd, n, t_f) == (T, 0, T)


def test_psd_fall_at_frame_40():
    T = 100
    hulls = [square_hull()] * T
    cog = np.zeros((T, 2))
    comv = np.full((T, 3), 1.0)  # non-stationary motion
    nonfoot = np.zeros(T, dtype=bool)
    nonfoot[40:] = True
    psd, n, t_f = pose_stability_duration(cog, hulls, comv, nonfoot)
    assert (psd, n, t_f) == (40, 0, 40)


def test_psd_stationary_outside_hull_25_of_100():
    T = 100
    hulls = [square_hull()] * T
    cog = np.zeros((T, 2))
    cog[10:35, 0] = 0.5  # outside for 25 frames
    comv = np.zeros((T, 3))
    nonfoot = np.zeros(T, dtype=bool)
    psd, n, t_f = pose_stability_duration(cog, hulls, comv, nonfoot)
    assert (psd, n, t_f) == (75, 25, T)


def test_psd_min_of_both_mechanisms():
    T = 50
    hulls = [square_hull()] * T
    cog = np.zeros((T, 2))
    cog[:10, 0] = 1.0  # 10 stationary violations
    comv = np.zeros((T, 3))
    nonfoot = np.zeros(T, dtype=bool)
    nonfoot[45:] = True
    psd, n, t_f = pose_stability_duration(cog, hulls, comv, nonfoot)
    assert (n, t_f) == (10, 45)
    assert psd == min(T - 10, 45) == 40


def test_psd_empty_hull_counts_as_outside():
    T = 10
    hulls = [np.zeros((0, 2))] * T
    cog = np.zeros((T, 2))
    comv = np.zeros((T, 3))
    nonfoot = np.zeros(T, dtype=bool)
    psd, n, t_f = pose_stability_duration(cog, hulls, comv, nonfoot)
    assert n == T
    assert psd == 0


def test_psd_stationary_threshold_boundary():
    T = 4
    hulls = [np.zeros((0, 2))] * T  # outside whenever stationary
    cog = np.zeros((T, 2))
    comv = np.zeros((T, 3))
    comv[0, 0] = 0.25   # exactly at the threshold: non-stationary test is <
    comv[1, 0] = 0.249
    nonfoot = np.zeros(T, dtype=bool)
    psd, n, t_f = pose_stability_duration(cog, hulls, comv, nonfoot)
    assert n == 3  # frames 1..3 stationary


# ---------------------------------------------------------------------------
# footskate / ground penetration
# ---------------------------------------------------------------------------


def foot_seq(positions, fps=25.0):
    sk = Skeleton("CUSTOM", ("pelvis", "left_ankle"), (-1, 0))
    T = positions.shape[0]
    frames = np.zeros((T, 2, 3))
    frames[:, 0, 2] = 1.0
    frames[:, 1] = positions
    return PoseSequence(sk, fps, frames)


def test_footskate_pinned_feet_zero():
    T = 50
    pos = np.zeros((T, 3))
    seq = foot_seq(pos)
    contacts = ContactStates((1,), np.ones((T, 1), dtype=bool))
    assert footskate(seq, contacts) == 0.0


def test_footskate_sliding_span_counts_10_percent():
    T = 100
    pos = np.zeros((T, 3))
    for t in range(20, 30):
        pos[t, 0] = pos[t - 1, 0] + 0.05  # 5 cm per frame while in contact
    pos[30:, 0] = pos[29, 0]
    flags = np.zeros((T, 1), dtype=bool)
    flags[20:30] = True
    seq = foot_seq(pos)
    assert np.isclose(footskate(seq, ContactStates((1,), flags)), 10.0)


def test_footskate_no_contact_is_zero(rng):
    T = 40
    pos = rng.normal(size=(T, 3))
    seq = foot_seq(pos)
    contacts = ContactStates((1,), np.zeros((T, 1), dtype=bool))
    assert footskate(seq, contacts) == 0.0


def test_footskate_vertical_motion_ignored():
    T = 20
    pos = np.zeros((T, 3))
    pos[:, 2] = np.linspace(0, 1.0, T)  # rising but not translating
    seq = foot_seq(pos)
    contacts = ContactStates((1,), np.ones((T, 1), dtype=bool))
    assert footskate(seq, contacts) == 0.0


def test_gp_zero_when_all_above():
    frames = np.ones((10, 4, 3))
    seq = PoseSequence(flat_skeleton(), 25.0, frames)
    assert ground_penetration(seq, GroundPlane(0.0)) == 0.0


def test_gp_mean_over_penetrating_instances():
    frames = np.ones((10, 4, 3))
    frames[2, 1, 2] = -0.004
    frames[7, 3, 2] = -0.006
    seq = PoseSequence(flat_skeleton(), 25.0, frames)
    assert np.isclose(ground_penetration(seq, GroundPlane(0.0)), 5.0)


def test_gp_translation_shifts_depths():
    frames = np.ones((10, 4, 3))
    frames[2, 1, 2] = -0.004
    seq = PoseSequence(flat_skeleton(), 25.0, frames)
    lowered = seq.with_frames(seq.frames - np.array([0, 0, 0.01]))
    assert np.isclose(ground_penetration(lowered, GroundPlane(0.0)), 14.0)


def test_fs_gp_invariant_under_horizontal_translation(rng):
    T = 30
    pos = np.cumsum(rng.normal(size=(T, 3)) * 0.01, axis=0)
    seq = foot_seq(pos)
    flags = ContactStates((1,), rng.random((T, 1)) < 0.5)
    plane = GroundPlane(0.0)
    moved = seq.with_frames(seq.frames + np.array([5.0, -3.0, 0.0]))
    assert footskate(seq, flags) == footskate(moved, flags)
    assert ground_penetration(seq, plane) == ground_penetration(moved, plane)


# ---------------------------------------------------------------------------
# mpjpe family
# ---------------------------------------------------------------------------


def test_mpjpe_identical_is_zero(rng):
    frames = rng.normal(size=(5, 4, 3))
    seq = PoseSequence(flat_skeleton(), 25.0, frames)
    cam = np.hstack([np.eye(3), np.array([[0], [0], [10.0]])])
    m, g, px = mpjpe_family(seq, seq, cameras=(cam,))
    assert (m, g, px) == (0.0, 0.0, 0.0)


def test_mpjpe_translation_cancels_root_relative(rng):
    frames = rng.normal(size=(5, 4, 3))
    gt = PoseSequence(flat_skeleton(), 25.0, frames)
    pred = gt.with_frames(frames + np.array([0.1, 0, 0]))
    m, g, px = mpjpe_family(pred, gt)
    assert np.isclose(m, 0.0, atol=1e-9)
    assert np.isclose(g, 100.0)
    assert px is None


def test_mpjpe_matches_brute_force_oracle(rng):
    frames_a = rng.normal(size=(5, 4, 3)) + np.array([0, 0, 5.0])
    frames_b = frames_a + rng.normal(size=(5, 4, 3)) * 0.02
    pred = PoseSequence(flat_skeleton(), 25.0, frames_a)
    gt = PoseSequence(flat_skeleton(), 25.0, frames_b)
    cam = np.array([[1000.0, 0, 500, 0], [0, 1000.0, 400, 0], [0, 0, 1, 2.0]])
    m, g, px = mpjpe_family(pred, gt, cameras=(cam,))
    em, eg, epx = mpjpe_oracle(frames_a, frames_b, frames_a[:, 0], frames_b[:, 0],
                               [cam])
    assert np.isclose(m, em, rtol=1e-9)
    assert np.isclose(g, eg, rtol=1e-9)
    assert np.isclose(px, epx, rtol=1e-9)


def test_mpjpe_mutual_joints_only(rng):
    pred = PoseSequence(flat_skeleton(4), 25.0, rng.normal(size=(3, 4, 3)))
    other = Skeleton("CUSTOM", ("pelvis", "j1", "extra"), (-1, 0, 0))
    frames = np.concatenate([pred.frames[:, :2], rng.normal(size=(3, 1, 3))], axis=1)
    gt = PoseSequence(other, 25.0, frames)
    m, g, px = mpjpe_family(pred, gt)
    assert np.isclose(m, 0.0, atol=1e-9)
    assert np.isclose(g, 0.0, atol=1e-9)


def test_mpjpe_no_mutual_joints_raises(rng):
    a = PoseSequence(flat_skeleton(3), 25.0, rng.normal(size=(3, 3, 3)))
    other = Skeleton("CUSTOM", ("x", "y"), (-1, 0))
    b = PoseSequence(other, 25.0, rng.normal(size=(3, 2, 3)))
    with pytest.raises(SchemaError):
        mpjpe_family(a, b)


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


def full_report():
    return PlausibilityReport(
        num_frames=50, footskate_pct=2.5, ground_penetration_mm=0.3,
        cd_mm=31.2, psd=44, psd_n=6, psd_t_f=48, mpjpe_mm=41.0,
        mpjpe_g_mm=55.0, mpjpe_2d_px=None,
        window_traces=[{"start": 0, "end": 26, "best_cost": 1.5,
                        "gen_best": [2.0, 1.5], "best_so_far": [2.0, 1.5],
                        "diverged_frame": -1}],
        contact_force_series=[[100.0, 200.0]] * 50,
        config_echo={"seed": 3}, low_confidence_flags=["x"])


def test_report_round_trip_lossless(tmp_path):
    import json
    r = full_report()
    path = str(tmp_path / "report.json")
    r.save(path)
    with open(path) as fh:
        loaded = PlausibilityReport.from_dict(json.load(fh))
    assert loaded == r


def test_report_invariants_enforced():
    with pytest.raises(ValueError):
        PlausibilityReport(num_frames=10, footskate_pct=120.0,
                           ground_penetration_mm=0.0)
    with pytest.raises(ValueError):
        PlausibilityReport(num_frames=10, footskate_pct=0.0,
                           ground_penetration_mm=-1.0)
    with pytest.raises(ValueError):
        PlausibilityReport(num_frames=10, footskate_pct=0.0,
                           ground_penetration_mm=0.0, psd=11)
    with pytest.raises(ValueError):
        PlausibilityReport(num_frames=10, footskate_pct=0.0,
                           ground_penetration_mm=0.0, cd_mm=float("inf"))


def test_csv_row_and_summary_columns_stable():
    row = report_csv_row("seq", full_report())
    text = csv_summary([row])
    header = text.splitlines()[0]
    assert header == ("sequence,num_frames,cd_mm,psd,psd_n,psd_t_f,"
                      "footskate_pct,ground_penetration_mm,mpjpe_mm,"
                      "mpjpe_g_mm,mpjpe_2d_px,diverged,low_confidence")
    assert "seq" in text.splitlines()[1]
