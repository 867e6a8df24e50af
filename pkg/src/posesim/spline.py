"""Clamped cubic B-splines over optimization windows.

Control points are the CMA-ES search variables: one vector of all controllable
Euler channels per knot. Evaluation outside the window clamps to the endpoint.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import BSpline

log = logging.getLogger(__name__)

DEGREE = 3
GIMBAL_WARN_RAD = np.deg2rad(85.0)


def control_point_count(t0: float, t1: float, knot_spacing: float) -> int:
    segments = max(1, round((t1 - t0) / knot_spacing)) if t1 > t0 else 1
    return segments + DEGREE


def clamped_knots(t0: float, t1: float, n_ctrl: int) -> np.ndarray:
    segments = n_ctrl - DEGREE
    interior = np.linspace(t0, t1, segments + 1)[1:-1]
    return np.concatenate((np.full(DEGREE + 1, t0), interior, np.full(DEGREE + 1, t1)))


@dataclass(frozen=True)
class CubicBSpline:
    knots: np.ndarray        # full clamped knot vector
    control: np.ndarray      # (n_ctrl, n_channels)

    @property
    def t0(self) -> float:
        return float(self.knots[DEGREE])

    @property
    def t1(self) -> float:
        return float(self.knots[-DEGREE - 1])

    @property
    def n_ctrl(self) -> int:
        return self.control.shape[0]

    def evaluate(self, times: np.ndarray) -> np.ndarray:
        """(len(times), n_channels); times clamped to the knot span."""
        t = np.clip(np.asarray(times, dtype=np.float64), self.t0, self.t1)
        A = design_matrix(t, self.knots)
        return A @ self.control

    def with_control(self, control: np.ndarray) -> "CubicBSpline":
        control = np.asarray(control, dtype=np.float64)
        if control.shape != self.control.shape:
            control = control.reshape(self.control.shape)
        return CubicBSpline(self.knots, control)


def design_matrix(times: np.ndarray, knots: np.ndarray) -> np.ndarray:
    t = np.clip(np.asarray(times, dtype=np.float64),
                knots[DEGREE], knots[-DEGREE - 1])
    # keep the final time inside the half-open support of the last basis
    t = np.minimum(t, knots[-DEGREE - 1] - 1e-12 * max(1.0, abs(knots[-DEGREE - 1])))
    return BSpline.design_matrix(t, knots, DEGREE).toarray()


def fit_spline(times: np.ndarray, values: np.ndarray,
               knot_spacing: float) -> CubicBSpline:
    """Least-squares fit; values are (F, n_channels), already unwrapped.

    Logs a warning when any pitch-like channel sits near gimbal lock, since
    Euler fitting degrades there; the fit still proceeds.
    """
    times = np.asarray(times, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    t0, t1 = float(times[0]), float(times[-1])
    if t1 <= t0:
        t1 = t0 + 1e-6
    n_ctrl = control_point_count(t0, t1, knot_spacing)
    knots = clamped_knots(t0, t1, n_ctrl)
    A = design_matrix(times, knots)
    coeffs, *_ = np.linalg.lstsq(A, values, rcond=None)
    return CubicBSpline(knots, coeffs)


def unwrap_channels(angles: np.ndarray) -> np.ndarray:
    """Per-channel unwrap along the time axis; removes 2*pi jumps."""
    return np.unwrap(np.asarray(angles, dtype=np.float64), axis=0)


def warn_if_gimbal(euler_channels: np.ndarray, pitch_indices) -> bool:
    near = False
    for idx in pitch_indices:
        if np.any(np.abs(euler_channels[:, idx]) > GIMBAL_WARN_RAD):
            near = True
    if near:
        log.warning("Euler pitch near gimbal lock (|pitch| > 85 deg); "
                    "spline fit quality may degrade")
    return near
