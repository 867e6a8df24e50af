import logging

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from posesim.spline import (
    clamped_knots,
    control_point_count,
    fit_spline,
    unwrap_channels,
    warn_if_gimbal,
)


def window_times(n=13, fps=25.0):
    return np.arange(n) / fps


def test_constant_window_reproduced_exactly():
    times = window_times()
    values = np.full((13, 4), 0.37)
    sp = fit_spline(times, values, knot_spacing=0.08)
    assert np.allclose(sp.control, 0.37, atol=1e-9)
    assert np.allclose(sp.evaluate(times), 0.37, atol=1e-9)


def test_linear_ramp_reproduced():
    times = window_times()
    values = np.outer(times, [1.0, -2.0])
    sp = fit_spline(times, values, knot_spacing=0.08)
    assert np.allclose(sp.evaluate(times), values, atol=1e-6)


def test_sinusoid_rms_error_vs_dense_oracle():
    fps = 25.0
    times = np.arange(26) / fps  # 1 s window
    values = np.sin(2 * np.pi * 1.0 * times)[:, None]
    sp = fit_spline(times, values, knot_spacing=0.08)
    dense = np.linspace(times[0], times[-1], 2000)
    truth = np.sin(2 * np.pi * 1.0 * dense)[:, None]
    rms = np.sqrt(np.mean((sp.evaluate(dense) - truth) ** 2))
    assert rms < 0.02


def test_smooth_motion_fit_error_bound():
    fps = 25.0
    times = np.arange(13) / fps
    rng = np.random.default_rng(5)
    # smooth motion: random low-frequency mixture
    values = sum(a * np.sin(2 * np.pi * f * times + p)[:, None]
                 for a, f, p in zip(rng.uniform(0.1, 0.5, 3),
                                    rng.uniform(0.3, 1.5, 3),
                                    rng.uniform(0, 6, 3)))
    sp = fit_spline(times, values, knot_spacing=0.08)
    rms = np.sqrt(np.mean((sp.evaluate(times) - values) ** 2))
    assert rms < 0.05


def test_evaluation_clamps_outside_window():
    times = window_times()
    values = np.outer(times, [1.0])
    sp = fit_spline(times, values, knot_spacing=0.08)
    lo = sp.evaluate(np.array([times[0] - 1.0]))
    hi = sp.evaluate(np.array([times[-1] + 1.0]))
    assert np.allclose(lo, sp.evaluate(times[:1]), atol=1e-9)
    assert np.allclose(hi, sp.evaluate(times[-1:]), atol=1e-9)


def test_control_point_count_matches_spacing():
    n = control_point_count(0.0, 0.48, 0.08)
    assert n == 6 + 3
    knots = clamped_knots(0.0, 0.48, n)
    assert knots[0] == 0.0 and knots[-1] == 0.48
    assert len(knots) == n + 4


def test_unwrap_removes_2pi_jumps():
    fps = 25.0
    t = np.arange(50) / fps
    yaw = 2.5 * 2 * np.pi * t  # continuously spinning
    wrapped = np.mod(yaw + np.pi, 2 * np.pi) - np.pi
    un = unwrap_channels(wrapped[:, None])
    assert np.all(np.abs(np.diff(un[:, 0])) < np.pi)
    sp = fit_spline(t, un, knot_spacing=0.08)
    assert np.all(np.abs(np.diff(sp.control[:, 0])) < np.pi)


@given(st.integers(2, 30))
def test_fit_handles_any_frame_count(n):
    times = np.arange(n) / 25.0
    values = np.sin(times)[:, None]
    sp = fit_spline(times, values, knot_spacing=0.08)
    out = sp.evaluate(times)
    assert out.shape == (n, 1)
    assert np.isfinite(out).all()


def test_gimbal_warning_logged(caplog):
    angles = np.zeros((10, 3))
    angles[:, 1] = np.deg2rad(87.0)
    with caplog.at_level(logging.WARNING):
        assert warn_if_gimbal(angles, [1])
    assert any("gimbal" in r.message for r in caplog.records)
    caplog.clear()
    angles[:, 1] = 0.3
    with caplog.at_level(logging.WARNING):
        assert not warn_if_gimbal(angles, [1])
    assert not caplog.records


def test_with_control_reshapes_flat_vector():
    times = window_times()
    values = np.zeros((13, 2))
    sp = fit_spline(times, values, knot_spacing=0.08)
    flat = np.arange(sp.control.size, dtype=np.float64)
    sp2 = sp.with_control(flat)
    assert sp2.control.shape == sp.control.shape
