"""Compiled stepping kernels.

A field is passed as the tuple returned by ``FieldModel.packed()``:
``(b0, inv_eps, B1, A1, A1_jac, E, phi)``. Term tables are float arrays, see
:mod:`gyrostep.polynomial` for row layouts.
"""

import numpy as np
from numba import njit

BORIS, VARIATIONAL, FILTERED = 0, 1, 2

OK, NONCONVERGED, BLOWUP = 0, 3, 4


@njit(cache=True, inline="always")
def _mono(x, row, off):
    return x[0] ** int(row[off]) * x[1] ** int(row[off + 1]) * x[2] ** int(row[off + 2])


@njit(cache=True)
def poly_vec(tab, x):
    out = np.zeros(3)
    for r in range(tab.shape[0]):
        out[int(tab[r, 0])] += tab[r, 1] * _mono(x, tab[r], 2)
    return out


@njit(cache=True)
def poly_jac(tab, x):
    out = np.zeros((3, 3))
    for r in range(tab.shape[0]):
        out[int(tab[r, 0]), int(tab[r, 1])] += tab[r, 2] * _mono(x, tab[r], 3)
    return out


@njit(cache=True)
def poly_scalar(tab, x):
    s = 0.0
    for r in range(tab.shape[0]):
        s += tab[r, 0] * _mono(x, tab[r], 1)
    return s


@njit(cache=True)
def total_B(fa, x):
    return fa[0] * fa[1] + poly_vec(fa[2], x)


@njit(cache=True)
def cross(a, b):
    return np.array([a[1] * b[2] - a[2] * b[1],
                     a[2] * b[0] - a[0] * b[2],
                     a[0] * b[1] - a[1] * b[0]])


@njit(cache=True)
def norm(a):
    return np.sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])


@njit(cache=True)
def mv(M, v):
    out = np.empty(3)
    for i in range(3):
        out[i] = M[i, 0] * v[0] + M[i, 1] * v[1] + M[i, 2] * v[2]
    return out


@njit(cache=True)
def dot(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


@njit(cache=True)
def boris_rotate(v_plus, B, h):
    """Closed-form solution of ``v- - v+ = (h/2)(v- + v+) × B``."""
    t = 0.5 * h * B
    s = 2.0 * t / (1.0 + t[0] * t[0] + t[1] * t[1] + t[2] * t[2])
    v_prime = v_plus + cross(v_plus, t)
    return v_plus + cross(v_prime, s)


# In-place variants used by the stepping loop; they avoid the per-call
# allocation of small arrays, which dominates the cost of a single step.

@njit(cache=True)
def _poly_vec_into(tab, x0, x1, x2, out):
    out[0] = 0.0
    out[1] = 0.0
    out[2] = 0.0
    for r in range(tab.shape[0]):
        out[int(tab[r, 0])] += (tab[r, 1] * x0 ** int(tab[r, 2]) * x1 ** int(tab[r, 3])
                                * x2 ** int(tab[r, 4]))


@njit(cache=True)
def _poly_jac_into(tab, x, out):
    for i in range(3):
        for j in range(3):
            out[i, j] = 0.0
    for r in range(tab.shape[0]):
        out[int(tab[r, 0]), int(tab[r, 1])] += tab[r, 2] * _mono(x, tab[r], 3)


@njit(cache=True)
def _total_B_into(fa, x, out):
    _poly_vec_into(fa[2], x[0], x[1], x[2], out)
    b0 = fa[0]
    for i in range(3):
        out[i] += b0[i] * fa[1]


@njit(cache=True)
def boris_advance(fa, x, x_prev, vh, h, n):
    """``n`` Boris steps in place on ``(x, x_prev, vh)``."""
    E = np.empty(3)
    B = np.empty(3)
    b0 = fa[0]
    inv = fa[1]
    x0, x1, x2 = x[0], x[1], x[2]
    p0, p1, p2 = x_prev[0], x_prev[1], x_prev[2]
    v0, v1, v2 = vh[0], vh[1], vh[2]
    hh = 0.5 * h
    for _ in range(n):
        _poly_vec_into(fa[5], x0, x1, x2, E)
        _poly_vec_into(fa[2], x0, x1, x2, B)
        t0 = hh * (B[0] + b0[0] * inv)
        t1 = hh * (B[1] + b0[1] * inv)
        t2 = hh * (B[2] + b0[2] * inv)
        f = 2.0 / (1.0 + t0 * t0 + t1 * t1 + t2 * t2)
        a0 = v0 + hh * E[0]
        a1 = v1 + hh * E[1]
        a2 = v2 + hh * E[2]
        q0 = a0 + a1 * t2 - a2 * t1
        q1 = a1 + a2 * t0 - a0 * t2
        q2 = a2 + a0 * t1 - a1 * t0
        v0 = a0 + f * (q1 * t2 - q2 * t1) + hh * E[0]
        v1 = a1 + f * (q2 * t0 - q0 * t2) + hh * E[1]
        v2 = a2 + f * (q0 * t1 - q1 * t0) + hh * E[2]
        p0, p1, p2 = x0, x1, x2
        x0 += h * v0
        x1 += h * v1
        x2 += h * v2
    x[0], x[1], x[2] = x0, x1, x2
    x_prev[0], x_prev[1], x_prev[2] = p0, p1, p2
    vh[0], vh[1], vh[2] = v0, v1, v2


@njit(cache=True)
def boris_step(fa, x, vh, h):
    xn = x.copy()
    vn = vh.copy()
    boris_advance(fa, xn, np.empty(3), vn, h, 1)
    return xn, vn


@njit(cache=True)
def _inverse_into(M, out):
    c00 = M[1, 1] * M[2, 2] - M[1, 2] * M[2, 1]
    c01 = M[1, 2] * M[2, 0] - M[1, 0] * M[2, 2]
    c02 = M[1, 0] * M[2, 1] - M[1, 1] * M[2, 0]
    det = M[0, 0] * c00 + M[0, 1] * c01 + M[0, 2] * c02
    out[0, 0] = c00 / det
    out[1, 0] = c01 / det
    out[2, 0] = c02 / det
    out[0, 1] = (M[0, 2] * M[2, 1] - M[0, 1] * M[2, 2]) / det
    out[1, 1] = (M[0, 0] * M[2, 2] - M[0, 2] * M[2, 0]) / det
    out[2, 1] = (M[0, 1] * M[2, 0] - M[0, 0] * M[2, 1]) / det
    out[0, 2] = (M[0, 1] * M[1, 2] - M[0, 2] * M[1, 1]) / det
    out[1, 2] = (M[0, 2] * M[1, 0] - M[0, 0] * M[1, 2]) / det
    out[2, 2] = (M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]) / det


@njit(cache=True)
def _implicit_into(fa, x, x_prev, vh, h, psi, tol, maxit, x_out, vh_out, wk, mats):
    """Implicit step writing ``x^{n+1}, v^{n+1/2}`` into ``x_out, vh_out``.

    ``wk`` is a (6, 3) and ``mats`` a (3, 3, 3) scratch array. Returns
    ``(iterations, converged, last_update)``.
    """
    E = wk[0]
    B = wk[1]
    a_prev = wk[2]
    vp = wk[3]
    pE = wk[4]
    a_it = wk[5]
    J = mats[0]
    M = mats[1]
    Minv = mats[2]
    _poly_vec_into(fa[5], x[0], x[1], x[2], E)
    _total_B_into(fa, x, B)
    _poly_jac_into(fa[4], x, J)
    _poly_vec_into(fa[3], x_prev[0], x_prev[1], x_prev[2], a_prev)
    # J <- K_B + A1'(x), the matrix of v -> v × B + A1'(x) v
    J[0, 1] += B[2]
    J[0, 2] -= B[1]
    J[1, 0] -= B[2]
    J[1, 2] += B[0]
    J[2, 0] += B[1]
    J[2, 1] -= B[0]
    for i in range(3):
        pE[i] = psi[i, 0] * E[0] + psi[i, 1] * E[1] + psi[i, 2] * E[2]
        vp[i] = vh[i] + 0.5 * h * pE[i]
        for j in range(3):
            M[i, j] = -h * (psi[i, 0] * J[0, j] + psi[i, 1] * J[1, j] + psi[i, 2] * J[2, j])
        M[i, i] += 2.0
    # 2w - 2v+ = h psi (K w - d),  w = (v- + v+)/2
    _inverse_into(M, Minv)

    # Boris predictor
    xi0, xi1, xi2 = x[0], x[1], x[2]
    t0, t1, t2 = 0.5 * h * B[0], 0.5 * h * B[1], 0.5 * h * B[2]
    f = 2.0 / (1.0 + t0 * t0 + t1 * t1 + t2 * t2)
    a0 = vh[0] + 0.5 * h * E[0]
    a1 = vh[1] + 0.5 * h * E[1]
    a2 = vh[2] + 0.5 * h * E[2]
    q0 = a0 + a1 * t2 - a2 * t1
    q1 = a1 + a2 * t0 - a0 * t2
    q2 = a2 + a0 * t1 - a1 * t0
    xi0 += h * (a0 + f * (q1 * t2 - q2 * t1) + 0.5 * h * E[0])
    xi1 += h * (a1 + f * (q2 * t0 - q0 * t2) + 0.5 * h * E[1])
    xi2 += h * (a2 + f * (q0 * t1 - q1 * t0) + 0.5 * h * E[2])

    c = 1.0 / (2.0 * h)
    upd = np.inf
    for it in range(1, maxit + 1):
        _poly_vec_into(fa[3], xi0, xi1, xi2, a_it)
        d0 = (a_it[0] - a_prev[0]) * c
        d1 = (a_it[1] - a_prev[1]) * c
        d2 = (a_it[2] - a_prev[2]) * c
        r0 = 2.0 * vp[0] - h * (psi[0, 0] * d0 + psi[0, 1] * d1 + psi[0, 2] * d2)
        r1 = 2.0 * vp[1] - h * (psi[1, 0] * d0 + psi[1, 1] * d1 + psi[1, 2] * d2)
        r2 = 2.0 * vp[2] - h * (psi[2, 0] * d0 + psi[2, 1] * d1 + psi[2, 2] * d2)
        w0 = 2.0 * (Minv[0, 0] * r0 + Minv[0, 1] * r1 + Minv[0, 2] * r2) - vp[0] + 0.5 * h * pE[0]
        w1 = 2.0 * (Minv[1, 0] * r0 + Minv[1, 1] * r1 + Minv[1, 2] * r2) - vp[1] + 0.5 * h * pE[1]
        w2 = 2.0 * (Minv[2, 0] * r0 + Minv[2, 1] * r1 + Minv[2, 2] * r2) - vp[2] + 0.5 * h * pE[2]
        n0 = x[0] + h * w0
        n1 = x[1] + h * w1
        n2 = x[2] + h * w2
        upd = np.sqrt((n0 - xi0) ** 2 + (n1 - xi1) ** 2 + (n2 - xi2) ** 2)
        xi0, xi1, xi2 = n0, n1, n2
        vh_out[0], vh_out[1], vh_out[2] = w0, w1, w2
        if upd <= tol * max(np.sqrt(n0 * n0 + n1 * n1 + n2 * n2), 1.0):
            x_out[0], x_out[1], x_out[2] = n0, n1, n2
            return it, True, upd
    x_out[0], x_out[1], x_out[2] = xi0, xi1, xi2
    return maxit, False, upd


@njit(cache=True)
def implicit_step(fa, x, x_prev, vh, h, psi, tol, maxit):
    """One step of the (filtered) variational scheme; ``psi = I`` gives the
    unfiltered method.

    Returns ``(x_new, vh_new, iterations, converged, last_update)``.
    """
    xn = np.empty(3)
    vn = np.empty(3)
    its, ok, upd = _implicit_into(fa, x, x_prev, vh, h, psi, tol, maxit, xn, vn,
                                  np.empty((6, 3)), np.empty((3, 3, 3)))
    return xn, vn, its, ok, upd


@njit(cache=True)
def filtered_start(fa, x0, v0, h, psi, phi_inv, vel_corr, tol, maxit):
    """Starting step of the filtered scheme; returns ``(v_half, x_m1, iters, ok, upd)``."""
    b0 = fa[0]
    E0 = poly_vec(fa[5], x0)
    B0 = total_B(fa, x0)
    J0 = poly_jac(fa[4], x0)
    vbar = mv(phi_inv, v0 - vel_corr * cross(E0, b0))
    base = cross(vbar, B0) + mv(J0, vbar) + E0
    dv = h * mv(psi, base)
    upd = np.inf
    for it in range(1, maxit + 1):
        xp = x0 + h * vbar + 0.5 * h * dv
        xm = x0 - h * vbar + 0.5 * h * dv
        d = (poly_vec(fa[3], xp) - poly_vec(fa[3], xm)) / (2.0 * h)
        dv_new = h * mv(psi, base - d)
        upd = norm(dv_new - dv)
        dv = dv_new
        if upd * h <= tol * max(norm(x0), 1.0):
            return vbar + 0.5 * dv, x0 - h * vbar + 0.5 * h * dv, it, True, upd
    return vbar + 0.5 * dv, x0 - h * vbar + 0.5 * h * dv, maxit, False, upd


@njit(cache=True)
def _recover_into(method, fa, x_prev, x_next, x_cur, h, phi_mat, vel_corr, out, E):
    c = 1.0 / (2.0 * h)
    c0 = (x_next[0] - x_prev[0]) * c
    c1 = (x_next[1] - x_prev[1]) * c
    c2 = (x_next[2] - x_prev[2]) * c
    if method != FILTERED:
        out[0], out[1], out[2] = c0, c1, c2
        return
    b0 = fa[0]
    _poly_vec_into(fa[5], x_cur[0], x_cur[1], x_cur[2], E)
    e0 = E[1] * b0[2] - E[2] * b0[1]
    e1 = E[2] * b0[0] - E[0] * b0[2]
    e2 = E[0] * b0[1] - E[1] * b0[0]
    out[0] = phi_mat[0, 0] * c0 + phi_mat[0, 1] * c1 + phi_mat[0, 2] * c2 + vel_corr * e0
    out[1] = phi_mat[1, 0] * c0 + phi_mat[1, 1] * c1 + phi_mat[1, 2] * c2 + vel_corr * e1
    out[2] = phi_mat[2, 0] * c0 + phi_mat[2, 1] * c1 + phi_mat[2, 2] * c2 + vel_corr * e2


@njit(cache=True)
def recover(method, fa, x_prev, x_next, x_cur, h, phi_mat, vel_corr):
    out = np.empty(3)
    _recover_into(method, fa, x_prev, x_next, x_cur, h, phi_mat, vel_corr, out, np.empty(3))
    return out


@njit(cache=True)
def _rotation_correct_inplace(fa, v, x_cur, h, B):
    _total_B_into(fa, x_cur, B)
    nb = norm(B)
    par = dot(v, B) / (nb * nb)
    scale = np.sqrt(1.0 + (0.5 * h * nb) ** 2)
    for i in range(3):
        p = par * B[i]
        v[i] = p + (v[i] - p) * scale


@njit(cache=True)
def rotation_corrected(fa, c, x_cur, h):
    """Rescale the perpendicular part of a Boris central-difference velocity by
    ``sqrt(1 + (h|B|/2)^2)``, i.e. the half-rotated kicked velocity."""
    v = c.copy()
    _rotation_correct_inplace(fa, v, x_cur, h, np.empty(3))
    return v


@njit(cache=True)
def energy(fa, x, v):
    return 0.5 * dot(v, v) + poly_scalar(fa[6], x)


@njit(cache=True)
def _moment_buf(fa, x, v, B):
    _total_B_into(fa, x, B)
    nb = norm(B)
    c0 = v[1] * B[2] - v[2] * B[1]
    c1 = v[2] * B[0] - v[0] * B[2]
    c2 = v[0] * B[1] - v[1] * B[0]
    return 0.5 * fa[1] * (c0 * c0 + c1 * c1 + c2 * c2) / nb ** 3


@njit(cache=True)
def magnetic_moment(fa, x, v):
    return _moment_buf(fa, x, v, np.empty(3))


@njit(cache=True)
def run(method, fa, has_phi, x0, v0, x1, vh1, h, n_steps, sample_every, psi, phi_mat,
        vel_corr, tol, maxit, blowup, ref_velocity, track):
    """Main stepping loop from the staggered start ``(x^1, v^{1/2})``.

    Samples at ``n % sample_every == 0`` and at ``n_steps``; conservation
    statistics are accumulated at every step unless ``track`` is false (then
    only at samples). ``stats`` holds
    ``[max|H-H0|, max|I-I0|, min I, max I, H0, I0, total_iters, max_iters,
    sum(H-H0), sum(t(H-H0)), sum t, sum t^2, count]``.
    """
    n_samp = n_steps // sample_every + 1
    if n_steps % sample_every != 0:
        n_samp += 1
    ts = np.empty(n_samp)
    xs = np.empty((n_samp, 3))
    vs = np.empty((n_samp, 3))
    hs = np.full(n_samp, np.nan)
    ms = np.empty(n_samp)
    stats = np.zeros(13)

    H0 = energy(fa, x0, v0) if has_phi else 0.0
    I0 = magnetic_moment(fa, x0, v0)
    stats[2] = I0
    stats[3] = I0
    stats[4] = H0
    stats[5] = I0
    ts[0] = 0.0
    xs[0] = x0
    vs[0] = v0
    ms[0] = 0.0
    if has_phi:
        hs[0] = 0.0
    k = 1

    # rows of P hold x^{n-1}, x^n, x^{n+1}; rows of V hold v^{n-1/2}, v^{n+1/2}
    P = np.empty((3, 3))
    V = np.empty((2, 3))
    P[0] = x0
    P[1] = x1
    V[0] = vh1
    ip, ic, inx = 0, 1, 2
    iv, ivn = 0, 1
    v = np.empty(3)
    buf = np.empty(3)
    wk = np.empty((6, 3))
    mats = np.empty((3, 3, 3))
    status = OK
    fail_step = -1
    last_upd = 0.0
    n = 1
    while n <= n_steps:
        if method == BORIS and not track and n % sample_every != 0:
            # jump to the next sampled step in one call
            nxt = min((n // sample_every + 1) * sample_every, n_steps)
            if nxt > n:
                boris_advance(fa, P[ic], P[ip], V[iv], h, nxt - n)
                n = nxt
                if not norm(P[ic]) <= blowup:
                    status = BLOWUP
                    fail_step = n
                    break
        if method == BORIS:
            P[inx] = P[ic]
            V[ivn] = V[iv]
            boris_advance(fa, P[inx], buf, V[ivn], h, 1)
            its = 0
            ok = True
            upd = 0.0
        else:
            its, ok, upd = _implicit_into(fa, P[ic], P[ip], V[iv], h, psi, tol, maxit,
                                          P[inx], V[ivn], wk, mats)
        stats[6] += its
        if its > stats[7]:
            stats[7] = its
        if not ok:
            status = NONCONVERGED
            fail_step = n
            last_upd = upd
            break
        x = P[ic]
        sampled = n % sample_every == 0 or n == n_steps
        if track or sampled:
            _recover_into(method, fa, P[ip], P[inx], x, h, phi_mat, vel_corr, v, buf)
            if ref_velocity:
                _rotation_correct_inplace(fa, v, x, h, buf)
            t = n * h
            mI = _moment_buf(fa, x, v, buf)
            dI = mI - I0
            if abs(dI) > stats[1]:
                stats[1] = abs(dI)
            if mI < stats[2]:
                stats[2] = mI
            if mI > stats[3]:
                stats[3] = mI
            dH = 0.0
            if has_phi:
                dH = energy(fa, x, v) - H0
                if abs(dH) > stats[0]:
                    stats[0] = abs(dH)
                stats[8] += dH
                stats[9] += t * dH
                stats[10] += t
                stats[11] += t * t
                stats[12] += 1.0
            if sampled:
                ts[k] = t
                xs[k] = x
                vs[k] = v
                ms[k] = dI
                if has_phi:
                    hs[k] = dH
                k += 1
        if not norm(x) <= blowup:
            status = BLOWUP
            fail_step = n
            break
        ip, ic, inx = ic, inx, ip
        iv, ivn = ivn, iv
        n += 1
    return ts[:k], xs[:k], vs[:k], hs[:k], ms[:k], stats, status, fail_step, last_upd
