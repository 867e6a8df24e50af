"""Independent brute-force oracles the tests check the library against.

Everything here is deliberately written the slow, obvious way (or on top of
scipy) and never calls into the code paths under test.
"""

import numpy as np
from scipy.spatial.transform import Rotation as SR


def brute_median(frames: np.ndarray, window: int) -> np.ndarray:
    """Edge-replicated temporal median: sort the window, pick the middle."""
    T = frames.shape[0]
    half = window // 2
    out = np.empty_like(frames)
    for t in range(T):
        idx = [min(max(t + k, 0), T - 1) for k in range(-half, half + 1)]
        win = frames[idx]
        out[t] = np.sort(win, axis=0)[half]
    return out


def halfplane_contains(points: np.ndarray, p, tol: float = 1e-9) -> bool:
    """Point-in-convex-hull by the O(n^3) half-plane test: for every directed
    pair forming a supporting edge, the query must not lie strictly outside."""
    pts = np.asarray(points, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    n = pts.shape[0]
    if n == 0:
        return False
    if n == 1:
        return bool(np.linalg.norm(p - pts[0]) <= tol)
    found_edge = False
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            a, b = pts[i], pts[j]
            d = b - a
            if np.linalg.norm(d) < 1e-15:
                continue
            cross = d[0] * (pts[:, 1] - a[1]) - d[1] * (pts[:, 0] - a[0])
            if np.all(cross >= -tol):  # supporting edge, interior to the left
                found_edge = True
                pc = d[0] * (p[1] - a[1]) - d[1] * (p[0] - a[0])
                if pc < -tol:
                    return False
    if not found_edge:
        # all points collinear: distance to the segment span
        d = pts[np.argmax(np.linalg.norm(pts - pts[0], axis=1))] - pts[0]
        nd = np.linalg.norm(d)
        if nd < 1e-15:
            return bool(np.linalg.norm(p - pts[0]) <= tol)
        t = np.clip((p - pts[0]) @ d / (nd * nd), 0.0, 1.0)
        return bool(np.linalg.norm(p - (pts[0] + t * d)) <= tol)
    return True


def scipy_rot_from_quat_wxyz(q):
    q = np.asarray(q, dtype=np.float64)
    return SR.from_quat(np.concatenate([q[1:], q[:1]]))


def quat_wxyz_from_scipy(r: SR) -> np.ndarray:
    xyzw = r.as_quat()
    q = np.concatenate([xyzw[3:], xyzw[:3]])
    return q if q[0] >= 0 else -q


def fk_marker_oracle(model, root_pos, root_rot: SR, locals_: dict) -> dict:
    """Marker world positions by a scipy-based tree walk.

    locals_: link name -> scipy Rotation (spherical) or hinge angle (revolute).
    """
    world = {}
    out = {}
    for link in model.links:
        if link.parent is None:
            Rw, ow = root_rot, np.asarray(root_pos, dtype=np.float64)
        else:
            Rp, op = world[link.parent]
            if link.joint.type == "spherical":
                Rl = locals_[link.name]
            else:
                Rl = SR.from_rotvec(np.asarray(link.joint.axis) * locals_[link.name])
            Rw = Rp * Rl
            ow = op + Rp.apply(np.asarray(link.joint.origin))
        world[link.name] = (Rw, ow)
        for name, local in link.markers.items():
            out[name] = ow + Rw.apply(np.asarray(local))
    return out


def mpjpe_oracle(pred, gt, pred_root, gt_root, cameras):
    """Per-joint brute-force distances: (mpjpe_mm, mpjpe_g_mm, mpjpe_2d_px)."""
    T, J, _ = pred.shape
    dg, dr, d2 = [], [], []
    for t in range(T):
        for j in range(J):
            dg.append(np.linalg.norm(pred[t, j] - gt[t, j]))
            dr.append(np.linalg.norm((pred[t, j] - pred_root[t])
                                     - (gt[t, j] - gt_root[t])))
    for cam in cameras or []:
        for t in range(T):
            for j in range(J):
                def proj(p):
                    h = cam @ np.append(p, 1.0)
                    return h[:2] / h[2]
                d2.append(np.linalg.norm(proj(pred[t, j]) - proj(gt[t, j])))
    mp2d = float(np.mean(d2)) if d2 else None
    return float(np.mean(dr) * 1000), float(np.mean(dg) * 1000), mp2d
