"""Reduced-coordinate articulated dynamics kernels (numba, nopython).

State layout
------------
q: [root px py pz, root quat wxyz] + per joint (spherical: quat wxyz,
   revolute: angle). v: [root angular velocity (world), root origin linear
   velocity (world)] + per joint (spherical: angular velocity in child frame,
   revolute: rate).

Dynamics are assembled in world coordinates: the joint-space mass matrix via
per-body Jacobians, velocity-product and gravity bias via a recursive
Newton-Euler sweep with zero joint acceleration, ground contact as penalty
springs with a Coulomb friction cap. Damping terms (joint-space derivative
gains and contact damping) can be folded into the solve matrix, which keeps
the 1 kHz fixed step stable at stiff settings.

Everything here is deterministic: fixed iteration order, no threading inside
a kernel, no library solver calls.
"""

import numpy as np
from numba import njit

from .rotations import (
    quat_conj,
    quat_mul,
    quat_normalize,
    quat_to_mat,
    quat_to_rotvec,
    rotvec_to_quat,
)

# jtype codes, mirroring humanoid.py
_FREE = 0
_SPHERICAL = 1
_REVOLUTE = 2

VELOCITY_GUARD = 1.0e5  # any |v| beyond this counts as divergence


@njit(cache=True, nogil=True)
def _cross(a, b):
    out = np.empty(3)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


@njit(cache=True, nogil=True)
def fk_pass(mp, q):
    """World rotation, joint-origin position, and com position per body."""
    nb = mp.parent.shape[0]
    R = np.empty((nb, 3, 3))
    o = np.empty((nb, 3))
    c = np.empty((nb, 3))
    for i in range(nb):
        qo = mp.q_off[i]
        p = mp.parent[i]
        if mp.jtype[i] == _FREE:
            R[i] = quat_to_mat(q[qo + 3:qo + 7])
            o[i] = q[qo:qo + 3]
        else:
            if mp.jtype[i] == _SPHERICAL:
                Rrel = quat_to_mat(q[qo:qo + 4])
            else:
                Rrel = quat_to_mat(rotvec_to_quat(mp.axis[i] * q[qo]))
            R[i] = R[p] @ Rrel
            o[i] = o[p] + R[p] @ mp.jpos[i]
        c[i] = o[i] + R[i] @ mp.com[i]
    return R, o, c


@njit(cache=True, nogil=True)
def velocity_pass(mp, q, v, R, o, c):
    """World angular velocity, origin velocity, com velocity, and the joint
    angular-velocity contribution (world) per body."""
    nb = mp.parent.shape[0]
    w = np.empty((nb, 3))
    vo = np.empty((nb, 3))
    vc = np.empty((nb, 3))
    wj = np.zeros((nb, 3))
    for i in range(nb):
        vi = mp.v_off[i]
        p = mp.parent[i]
        if mp.jtype[i] == _FREE:
            w[i] = v[vi:vi + 3]
            vo[i] = v[vi + 3:vi + 6]
        else:
            if mp.jtype[i] == _SPHERICAL:
                wj[i] = R[i] @ v[vi:vi + 3]
            else:
                wj[i] = (R[i] @ mp.axis[i]) * v[vi]
            w[i] = w[p] + wj[i]
            vo[i] = vo[p] + _cross(w[p], o[i] - o[p])
        vc[i] = vo[i] + _cross(w[i], c[i] - o[i])
    return w, vo, vc, wj


@njit(cache=True, nogil=True)
def _body_dofs(mp, R, o, b, point, dof_idx, ang, lin):
    """Jacobian rows of a world point rigidly attached to body b.

    Fills dof_idx/ang/lin for every ancestor DOF and returns the count.
    """
    cnt = 0
    j = b
    while j >= 0:
        vi = mp.v_off[j]
        jt = mp.jtype[j]
        if jt == _FREE:
            for k in range(3):
                dof_idx[cnt] = vi + k
                ang[cnt, 0] = 0.0
                ang[cnt, 1] = 0.0
                ang[cnt, 2] = 0.0
                ang[cnt, k] = 1.0
                arm = point - o[j]
                axis = np.zeros(3)
                axis[k] = 1.0
                lin[cnt] = _cross(axis, arm)
                cnt += 1
            for k in range(3):
                dof_idx[cnt] = vi + 3 + k
                ang[cnt, 0] = 0.0
                ang[cnt, 1] = 0.0
                ang[cnt, 2] = 0.0
                lin[cnt, 0] = 0.0
                lin[cnt, 1] = 0.0
                lin[cnt, 2] = 0.0
                lin[cnt, k] = 1.0
                cnt += 1
        elif jt == _SPHERICAL:
            for k in range(3):
                dof_idx[cnt] = vi + k
                ang[cnt, 0] = R[j, 0, k]
                ang[cnt, 1] = R[j, 1, k]
                ang[cnt, 2] = R[j, 2, k]
                lin[cnt] = _cross(ang[cnt], point - o[j])
                cnt += 1
        else:
            dof_idx[cnt] = vi
            ang[cnt] = R[j] @ mp.axis[j]
            lin[cnt] = _cross(ang[cnt], point - o[j])
            cnt += 1
        j = mp.parent[j]
    return cnt


@njit(cache=True, nogil=True)
def mass_matrix(mp, R, o, c):
    nb = mp.parent.shape[0]
    nv = mp.nv
    M = np.zeros((nv, nv))
    dof_idx = np.empty(nv, dtype=np.int64)
    ang = np.empty((nv, 3))
    lin = np.empty((nv, 3))
    iw_ang = np.empty((nv, 3))
    for b in range(nb):
        cnt = _body_dofs(mp, R, o, b, c[b], dof_idx, ang, lin)
        Iw = R[b] @ mp.inertia[b] @ R[b].T
        m = mp.mass[b]
        for a in range(cnt):
            iw_ang[a] = Iw @ ang[a]
        for a in range(cnt):
            ia = dof_idx[a]
            for d in range(cnt):
                ib = dof_idx[d]
                M[ia, ib] += (m * (lin[a, 0] * lin[d, 0] + lin[a, 1] * lin[d, 1]
                                   + lin[a, 2] * lin[d, 2])
                              + ang[a, 0] * iw_ang[d, 0]
                              + ang[a, 1] * iw_ang[d, 1]
                              + ang[a, 2] * iw_ang[d, 2])
    return M


@njit(cache=True, nogil=True)
def bias_forces(mp, R, o, c, w, vo, wj, f_ext, n_ext, gravity_z):
    """Generalized bias force: Coriolis/centrifugal + gravity - external.

    f_ext is the world-frame external force on each body, n_ext the external
    torque about the body origin. Computed with zero joint accelerations and
    the gravity trick (root accelerates at -g).
    """
    nb = mp.parent.shape[0]
    dw = np.empty((nb, 3))
    ao = np.empty((nb, 3))
    ac = np.empty((nb, 3))
    for i in range(nb):
        p = mp.parent[i]
        if p < 0:
            dw[i, 0] = 0.0
            dw[i, 1] = 0.0
            dw[i, 2] = 0.0
            ao[i, 0] = 0.0
            ao[i, 1] = 0.0
            ao[i, 2] = -gravity_z
        else:
            r = o[i] - o[p]
            ao[i] = ao[p] + _cross(dw[p], r) + _cross(w[p], _cross(w[p], r))
            dw[i] = dw[p] + _cross(w[i], wj[i])
        s = c[i] - o[i]
        ac[i] = ao[i] + _cross(dw[i], s) + _cross(w[i], _cross(w[i], s))

    f = np.empty((nb, 3))
    n = np.empty((nb, 3))
    for i in range(nb):
        Iw = R[i] @ mp.inertia[i] @ R[i].T
        Fi = mp.mass[i] * ac[i]
        Ni = Iw @ dw[i] + _cross(w[i], Iw @ w[i])
        f[i] = Fi - f_ext[i]
        n[i] = Ni + _cross(c[i] - o[i], Fi) - n_ext[i]
    for i in range(nb - 1, 0, -1):
        p = mp.parent[i]
        f[p] += f[i]
        n[p] += n[i] + _cross(o[i] - o[p], f[i])

    b = np.zeros(mp.nv)
    for i in range(nb):
        vi = mp.v_off[i]
        if mp.jtype[i] == _FREE:
            b[vi:vi + 3] = n[i]
            b[vi + 3:vi + 6] = f[i]
        elif mp.jtype[i] == _SPHERICAL:
            b[vi:vi + 3] = R[i].T @ n[i]
        else:
            axis_w = R[i] @ mp.axis[i]
            b[vi] = axis_w[0] * n[i, 0] + axis_w[1] * n[i, 1] + axis_w[2] * n[i, 2]
    return b


@njit(cache=True, nogil=True)
def contact_pass(mp, R, o, w, vo, plane_h, kn, cn, mu, kf):
    """Penalty contact forces against the horizontal plane z = plane_h.

    Returns per-body external force/torque accumulators, per-contact records
    (surface point, force split into lateral xy + normal z, body id), flags
    marking which records want implicit normal/tangential damping, and the
    count of active contacts.
    """
    nb = mp.parent.shape[0]
    ncp = mp.contact_body.shape[0]
    f_ext = np.zeros((nb, 3))
    n_ext = np.zeros((nb, 3))
    cpos = np.empty((ncp, 3))
    cforce = np.empty((ncp, 3))
    cbody = np.empty(ncp, dtype=np.int64)
    imp_n = np.empty(ncp, dtype=np.int64)
    imp_t = np.empty(ncp, dtype=np.int64)
    cnt = 0
    for k in range(ncp):
        b = mp.contact_body[k]
        x = o[b] + R[b] @ mp.contact_pos[k]
        low_z = x[2] - mp.contact_radius[k]
        pen = plane_h - low_z
        if pen <= 0.0:
            continue
        u = vo[b] + _cross(w[b], x - o[b])
        fn = kn * pen - cn * u[2]
        if fn <= 0.0:
            continue
        ftx = -kf * u[0]
        fty = -kf * u[1]
        ft = np.sqrt(ftx * ftx + fty * fty)
        cap = mu * fn
        slipping = ft > cap
        if slipping and ft > 0.0:
            scale = cap / ft
            ftx *= scale
            fty *= scale
        force = np.empty(3)
        force[0] = ftx
        force[1] = fty
        force[2] = fn
        f_ext[b] += force
        n_ext[b] += _cross(x - o[b], force)
        cpos[cnt, 0] = x[0]
        cpos[cnt, 1] = x[1]
        cpos[cnt, 2] = low_z
        cforce[cnt] = force
        cbody[cnt] = b
        imp_n[cnt] = 1
        imp_t[cnt] = 0 if slipping else 1
        cnt += 1
    return f_ext, n_ext, cpos, cforce, cbody, imp_n, imp_t, cnt


@njit(cache=True, nogil=True)
def pd_torques(mp, q, v, target_q, target_v, dt, stable):
    """Per-joint PD torques in joint coordinates, clamped to limits.

    With `stable` the proportional term is evaluated at the position predicted
    one step ahead from the current velocity.
    """
    tau = np.zeros(mp.nv)
    nb = mp.parent.shape[0]
    for i in range(nb):
        jt = mp.jtype[i]
        if jt == _FREE:
            continue
        qo = mp.q_off[i]
        vi = mp.v_off[i]
        if jt == _SPHERICAL:
            qj = q[qo:qo + 4]
            wl = v[vi:vi + 3]
            if stable:
                qj = quat_mul(qj, rotvec_to_quat(wl * dt))
            err = quat_to_rotvec(quat_mul(quat_conj(qj), target_q[qo:qo + 4]))
            t = mp.kp[i] * err + mp.kd[i] * (target_v[vi:vi + 3] - wl)
            tn = np.sqrt(t[0] * t[0] + t[1] * t[1] + t[2] * t[2])
            if tn > mp.tlim[i]:
                t *= mp.tlim[i] / tn
            tau[vi:vi + 3] = t
        else:
            th = q[qo]
            thd = v[vi]
            if stable:
                th = th + dt * thd
            t1 = mp.kp[i] * (target_q[qo] - th) + mp.kd[i] * (target_v[vi] - thd)
            if t1 > mp.tlim[i]:
                t1 = mp.tlim[i]
            elif t1 < -mp.tlim[i]:
                t1 = -mp.tlim[i]
            tau[vi] = t1
    return tau


@njit(cache=True, nogil=True)
def _chol_solve(A, b):
    """Solve A x = b for SPD A in place; returns x (A and b are clobbered)."""
    n = A.shape[0]
    for j in range(n):
        d = A[j, j]
        for k in range(j):
            d -= A[j, k] * A[j, k]
        if d < 1e-12:
            d = 1e-12
        d = np.sqrt(d)
        A[j, j] = d
        for i in range(j + 1, n):
            s = A[i, j]
            for k in range(j):
                s -= A[i, k] * A[j, k]
            A[i, j] = s / d
    # forward substitution L y = b
    for i in range(n):
        s = b[i]
        for k in range(i):
            s -= A[i, k] * b[k]
        b[i] = s / A[i, i]
    # back substitution L^T x = y
    for i in range(n - 1, -1, -1):
        s = b[i]
        for k in range(i + 1, n):
            s -= A[k, i] * b[k]
        b[i] = s / A[i, i]
    return b


@njit(cache=True, nogil=True)
def _integrate(mp, q, v, dt):
    nb = mp.parent.shape[0]
    for i in range(nb):
        qo = mp.q_off[i]
        vi = mp.v_off[i]
        jt = mp.jtype[i]
        if jt == _FREE:
            q[qo] += dt * v[vi + 3]
            q[qo + 1] += dt * v[vi + 4]
            q[qo + 2] += dt * v[vi + 5]
            dq = rotvec_to_quat(v[vi:vi + 3] * dt)
            q[qo + 3:qo + 7] = quat_normalize(quat_mul(dq, q[qo + 3:qo + 7]))
        elif jt == _SPHERICAL:
            dq = rotvec_to_quat(v[vi:vi + 3] * dt)
            q[qo:qo + 4] = quat_normalize(quat_mul(q[qo:qo + 4], dq))
        else:
            q[qo] += dt * v[vi]


@njit(cache=True, nogil=True)
def _state_ok(q, v):
    for i in range(q.shape[0]):
        if not np.isfinite(q[i]):
            return False
    for i in range(v.shape[0]):
        if not np.isfinite(v[i]) or abs(v[i]) > VELOCITY_GUARD:
            return False
    return True


@njit(cache=True, nogil=True)
def dynamics_step(mp, q, v, tau, plane_h, dt, gravity_z, kn, cn, mu, kf,
                  imp_kd_diag):
    """Advance one fixed step under applied generalized force tau.

    imp_kd_diag adds implicit joint damping (dt*kd) on the solve diagonal;
    pass zeros for plain torque-driven stepping. Mutates q and v. Returns
    (contact positions, contact forces, contact bodies, contact count, ok).
    """
    R, o, c = fk_pass(mp, q)
    w, vo, vc, wj = velocity_pass(mp, q, v, R, o, c)
    f_ext, n_ext, cpos, cforce, cbody, imp_n, imp_t, ccnt = contact_pass(
        mp, R, o, w, vo, plane_h, kn, cn, mu, kf)

    M = mass_matrix(mp, R, o, c)
    bias = bias_forces(mp, R, o, c, w, vo, wj, f_ext, n_ext, gravity_z)

    nv = mp.nv
    for d in range(nv):
        M[d, d] += imp_kd_diag[d]

    # implicit contact damping: M += dt * J^T D J per active contact point
    dof_idx = np.empty(nv, dtype=np.int64)
    ang = np.empty((nv, 3))
    lin = np.empty((nv, 3))
    for k in range(ccnt):
        dn = cn * imp_n[k]
        dtn = kf * imp_t[k]
        if dn == 0.0 and dtn == 0.0:
            continue
        cnt = _body_dofs(mp, R, o, cbody[k], cpos[k], dof_idx, ang, lin)
        for a in range(cnt):
            ia = dof_idx[a]
            for d in range(cnt):
                ib = dof_idx[d]
                M[ia, ib] += dt * (dtn * (lin[a, 0] * lin[d, 0]
                                          + lin[a, 1] * lin[d, 1])
                                   + dn * lin[a, 2] * lin[d, 2])

    rhs = np.empty(nv)
    for d in range(nv):
        rhs[d] = tau[d] - bias[d]
    acc = _chol_solve(M, rhs)
    for d in range(nv):
        v[d] += dt * acc[d]
    _integrate(mp, q, v, dt)
    ok = _state_ok(q, v)
    return cpos, cforce, cbody, ccnt, ok


@njit(cache=True, nogil=True)
def foot_contact_flags(mp, R, o, plane_h, eps):
    """Per-foot contact booleans: any contact point within eps of the plane."""
    nf = mp.foot_bodies.shape[0]
    flags = np.zeros(nf, dtype=np.int64)
    for k in range(mp.contact_body.shape[0]):
        b = mp.contact_body[k]
        for fi in range(nf):
            if mp.foot_bodies[fi] == b:
                x = o[b] + R[b] @ mp.contact_pos[k]
                if x[2] - mp.contact_radius[k] - plane_h < eps:
                    flags[fi] = 1
    return flags


@njit(cache=True, nogil=True)
def com_of(mp, c):
    total = 0.0
    out = np.zeros(3)
    for i in range(mp.mass.shape[0]):
        out += mp.mass[i] * c[i]
        total += mp.mass[i]
    return out / total


@njit(cache=True, nogil=True)
def com_velocity_of(mp, vc):
    total = 0.0
    out = np.zeros(3)
    for i in range(mp.mass.shape[0]):
        out += mp.mass[i] * vc[i]
        total += mp.mass[i]
    return out / total


@njit(cache=True, nogil=True)
def rollout_kernel(mp, q, v, targets_q, targets_v, plane_h, dt, gravity_z,
                   kn, cn, mu, kf, contact_eps, steps_per_frame, stable,
                   out_q, out_v, out_com, out_comv, out_foot_force,
                   out_foot_contact, out_nonfoot, out_cpos, out_cforce,
                   out_cbody, out_ccount):
    """Track one kinematic target per frame for steps_per_frame fixed steps.

    q/v are mutated in place (they end at the final state). Snapshot f is the
    state after tracking target f. Returns the index of the first diverged
    frame, or -1.
    """
    F = targets_q.shape[0]
    nv = mp.nv
    nf = mp.foot_bodies.shape[0]
    imp = np.zeros(nv)
    if stable:
        for i in range(mp.parent.shape[0]):
            if mp.jtype[i] == _FREE:
                continue
            vi = mp.v_off[i]
            ndof = 3 if mp.jtype[i] == _SPHERICAL else 1
            for k in range(ndof):
                imp[vi + k] = dt * mp.kd[i]

    for f in range(F):
        force_acc = np.zeros((nf, 3))
        nonfoot = 0
        for s in range(steps_per_frame):
            tau = pd_torques(mp, q, v, targets_q[f], targets_v[f], dt, stable)
            cpos, cforce, cbody, ccnt, ok = dynamics_step(
                mp, q, v, tau, plane_h, dt, gravity_z, kn, cn, mu, kf, imp)
            if not ok:
                return f
            for k in range(ccnt):
                b = cbody[k]
                found = False
                for fi in range(nf):
                    if mp.foot_bodies[fi] == b:
                        force_acc[fi] += cforce[k]
                        found = True
                if not found:
                    nonfoot = 1
            if s == steps_per_frame - 1:
                out_ccount[f] = ccnt
                for k in range(ccnt):
                    out_cpos[f, k] = cpos[k]
                    out_cforce[f, k] = cforce[k]
                    out_cbody[f, k] = cbody[k]

        R, o, c = fk_pass(mp, q)
        w, vo, vc, wj = velocity_pass(mp, q, v, R, o, c)
        out_q[f] = q
        out_v[f] = v
        out_com[f] = com_of(mp, c)
        out_comv[f] = com_velocity_of(mp, vc)
        for fi in range(nf):
            out_foot_force[f, fi] = force_acc[fi] / steps_per_frame
        flags = foot_contact_flags(mp, R, o, plane_h, contact_eps)
        for fi in range(nf):
            out_foot_contact[f, fi] = flags[fi]
        out_nonfoot[f] = nonfoot
    return -1
