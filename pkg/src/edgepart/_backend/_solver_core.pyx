# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled allocation kernels: the hot path of the Monte Carlo sweeps.

Same algorithm, constants and deterministic restart tilts as the pure-Python
twin in ``edgepart._backend.pure``; see that module for the design notes.
Only the single-secondary layout is compiled.
"""

from libc.math cimport floor, log
from libc.stdint cimport uint64_t

import numpy as np

MODE_ADAPTIVE = 0
MODE_DOU = 1
MODE_DOE = 2

cdef int _ADAPTIVE = 0
cdef int _DOU = 1
cdef int _DOE = 2

cdef double INF = float("inf")

cdef double DELTA0 = 0.05
cdef double C1 = 1e-4
cdef double T_INIT = 0.25
cdef int HALVE_MAX = 60
cdef double INNER_DECREASE = 0.01
cdef int INNER_CAP = 80
cdef double PULL_IN = 0.02
cdef double PERTURB = 0.5
cdef double Z_FLOOR = 1e-13
cdef double ULP_DOWN = 1.0 - 2.0 ** -52

cdef uint64_t SPLITMIX_GAMMA = <uint64_t>0x9E3779B97F4A7C15


cdef inline double _splitmix_next(uint64_t *state) noexcept nogil:
    cdef uint64_t z
    state[0] = state[0] + SPLITMIX_GAMMA
    z = state[0]
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    z = z ^ (z >> 31)
    return <double>(z >> 11) * (2.0 ** -53)


cdef class _Ws:
    """Instance arrays, budgets and scratch buffers for one solve."""
    cdef double[::1] b, alpha, beta, r_p, r_s, big_r
    cdef double n_rb, fp_total, fs_total
    cdef int m, mode
    cdef double[::1] grad, cand, work


cdef double _per_ue(_Ws w, int i, double n, double p, double s) noexcept nogil:
    """Latency of UE i at raw resources (n, p, s) under the workspace mode."""
    cdef double inv_nrp, g, h, u, du, tu, v, de, te, eta, chi, w_e
    inv_nrp = 1.0 / (n * w.r_p[i])
    g = w.alpha[i] / p
    h = w.alpha[i] / s
    if w.mode != _DOE:
        u = 1.0 / (n * w.r_s[i]) + h
        du = u + g
        tu = w.b[i] * (inv_nrp + g) * (u / du)
        if w.mode == _DOU:
            return tu
    v = 1.0 / w.big_r[i] + h
    de = v + g
    te = w.b[i] * (inv_nrp + g * (v / de))
    if w.mode == _DOE:
        return te
    eta = p / (w.alpha[i] * w.big_r[i]) + p / s + 1.0
    chi = n * w.r_s[i] / w.big_r[i]
    if chi > 1.0:
        chi = 1.0
    w_e = (2.0 - chi) / (2.0 * eta)
    return tu + w_e * (te - tu)


cdef double _obj_z(_Ws w, double[::1] z) noexcept nogil:
    cdef int i, m = w.m
    cdef double total = 0.0
    for i in range(m):
        total += w.beta[i] * _per_ue(
            w, i, z[i] * w.n_rb, z[m + i] * w.fp_total, z[2 * m + i] * w.fs_total
        )
    return total / m


cdef double _obj_raw(_Ws w, double[::1] n, double[::1] p, double[::1] s) noexcept nogil:
    cdef int i, m = w.m
    cdef double total = 0.0
    for i in range(m):
        total += w.beta[i] * _per_ue(w, i, n[i], p[i], s[i])
    return total / m


cdef double _grad_z(_Ws w, double[::1] z, double[::1] g_out) noexcept nogil:
    """Objective and its gradient in scaled coordinates."""
    cdef int i, m = w.m
    cdef double total = 0.0
    cdef double n, p, s, inv_nrp, inv_nrs, g, h, u, du, lam_u, a_fac, tu
    cdef double dtu_dn, dtu_dp, dtu_ds, v, de, lam_e, te, dte_dn, dte_dp, dte_ds
    cdef double eta, x_raw, chi, w_e, dchi_dn, deta_dp, deta_ds
    cdef double dwe_dn, dwe_dp, dwe_ds, diff, t, dt_dn, dt_dp, dt_ds, wi
    for i in range(m):
        n = z[i] * w.n_rb
        p = z[m + i] * w.fp_total
        s = z[2 * m + i] * w.fs_total
        inv_nrp = 1.0 / (n * w.r_p[i])
        inv_nrs = 1.0 / (n * w.r_s[i])
        g = w.alpha[i] / p
        h = w.alpha[i] / s

        u = inv_nrs + h
        du = u + g
        lam_u = u / du
        a_fac = inv_nrp + g
        tu = w.b[i] * a_fac * lam_u
        dtu_dn = w.b[i] * (-inv_nrp / n * lam_u + a_fac * (g / (du * du)) * (-inv_nrs / n))
        dtu_dp = w.b[i] * (-g / p * lam_u + a_fac * (u * g) / (p * du * du))
        dtu_ds = w.b[i] * a_fac * (g / (du * du)) * (-h / s)

        v = 1.0 / w.big_r[i] + h
        de = v + g
        lam_e = v / de
        te = w.b[i] * (inv_nrp + g * lam_e)
        dte_dn = -w.b[i] * inv_nrp / n
        dte_dp = -w.b[i] * g * v * v / (p * de * de)
        dte_ds = -w.b[i] * g * g * h / (s * de * de)

        if w.mode == _DOU:
            t = tu; dt_dn = dtu_dn; dt_dp = dtu_dp; dt_ds = dtu_ds
        elif w.mode == _DOE:
            t = te; dt_dn = dte_dn; dt_dp = dte_dp; dt_ds = dte_ds
        else:
            eta = p / (w.alpha[i] * w.big_r[i]) + p / s + 1.0
            x_raw = n * w.r_s[i] / w.big_r[i]
            chi = x_raw if x_raw < 1.0 else 1.0
            w_e = (2.0 - chi) / (2.0 * eta)
            dchi_dn = w.r_s[i] / w.big_r[i] if x_raw < 1.0 else 0.0
            deta_dp = 1.0 / (w.alpha[i] * w.big_r[i]) + 1.0 / s
            deta_ds = -p / (s * s)
            dwe_dn = -dchi_dn / (2.0 * eta)
            dwe_dp = -w_e * deta_dp / eta
            dwe_ds = -w_e * deta_ds / eta
            diff = te - tu
            t = tu + w_e * diff
            dt_dn = dtu_dn + dwe_dn * diff + w_e * (dte_dn - dtu_dn)
            dt_dp = dtu_dp + dwe_dp * diff + w_e * (dte_dp - dtu_dp)
            dt_ds = dtu_ds + dwe_ds * diff + w_e * (dte_ds - dtu_ds)

        wi = w.beta[i] / m
        total += wi * t
        g_out[i] = wi * dt_dn * w.n_rb
        g_out[m + i] = wi * dt_dp * w.fp_total
        g_out[2 * m + i] = wi * dt_ds * w.fs_total
    return total


cdef double _phi_z(_Ws w, double[::1] z, double mu, int lo) noexcept nogil:
    """Barrier-augmented objective; INF outside the strict interior."""
    cdef int i, blk, m = w.m
    cdef double barrier = 0.0, slack
    for i in range(lo, 3 * m):
        if z[i] <= Z_FLOOR:
            return INF
        barrier -= log(z[i])
    for blk in range(lo // m, 3):
        slack = 1.0
        for i in range(blk * m, (blk + 1) * m):
            slack -= z[i]
        if slack <= Z_FLOOR:
            return INF
        barrier -= log(slack)
    return _obj_z(w, z) + mu * barrier


cdef int _descend(_Ws w, double[::1] z, double mu, int budget, int lo) noexcept nogil:
    """Gradient descent with Armijo backtracking; returns iterations used."""
    cdef int iters = 0, i, k, blk, m = w.m
    cdef double t_prev = T_INIT, phi, phic, gnorm2, t, decrease, slack
    cdef double[::1] g = w.grad, zc = w.cand
    cdef bint accepted
    phi = _phi_z(w, z, mu, lo)
    while iters < INNER_CAP and iters < budget:
        _grad_z(w, z, g)
        for blk in range(lo // m, 3):
            slack = 1.0
            for i in range(blk * m, (blk + 1) * m):
                slack -= z[i]
            for i in range(blk * m, (blk + 1) * m):
                g[i] += mu * (1.0 / slack - 1.0 / z[i])
        for i in range(lo):
            g[i] = 0.0
        gnorm2 = 0.0
        for i in range(3 * m):
            gnorm2 += g[i] * g[i]
        iters += 1
        t = 2.0 * t_prev
        if t > 1.0:
            t = 1.0
        accepted = False
        for k in range(HALVE_MAX):
            for i in range(3 * m):
                zc[i] = z[i] - t * g[i]
            phic = _phi_z(w, zc, mu, lo)
            if phic <= phi - C1 * t * gnorm2:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        decrease = phi - phic
        for i in range(3 * m):
            z[i] = zc[i]
        phi = phic
        t_prev = t
        if decrease <= INNER_DECREASE * mu:
            break
    return iters


cdef int _barrier_solve(_Ws w, double[::1] z, double tol, int max_iters,
                        double barrier_init, double barrier_shrink, int lo,
                        bint *converged) noexcept nogil:
    cdef double f0 = _obj_z(w, z)
    cdef double mu = barrier_init * f0
    cdef double mu_final = tol * f0
    cdef int total = 0
    converged[0] = True
    while True:
        total += _descend(w, z, mu, max_iters - total, lo)
        if mu <= mu_final:
            break
        if total >= max_iters:
            converged[0] = False
            break
        mu *= barrier_shrink
    return total


cdef void _scale_block(_Ws w, double[::1] z, int blk) noexcept nogil:
    cdef int i, m = w.m
    cdef double s = 0.0
    for i in range(blk * m, (blk + 1) * m):
        s += z[i]
    if s <= 0.0:
        return
    for i in range(blk * m, (blk + 1) * m):
        z[i] /= s
    while True:
        s = 0.0
        for i in range(blk * m, (blk + 1) * m):
            s += z[i]
        if s <= 1.0:
            break
        for i in range(blk * m, (blk + 1) * m):
            z[i] *= ULP_DOWN
    return


cdef double _polish(_Ws w, double[::1] z, int lo) noexcept nogil:
    """Scale each free block to its full budget where that helps; returns F."""
    cdef int blk, i, p, m = w.m
    cdef double f_cur = _obj_z(w, z), f_new
    cdef double[::1] zc = w.cand
    for p in range(2):
        for blk in range(lo // m, 3):
            for i in range(3 * m):
                zc[i] = z[i]
            _scale_block(w, zc, blk)
            f_new = _obj_z(w, zc)
            if f_new <= f_cur:
                for i in range(3 * m):
                    z[i] = zc[i]
                f_cur = f_new
    return f_cur


cdef void _start_point(_Ws w, double[::1] z, uint64_t seed, int restart) noexcept nogil:
    cdef int blk, k, m = w.m
    cdef uint64_t state
    cdef double total
    if restart == 0:
        for k in range(3 * m):
            z[k] = (1.0 - DELTA0) / m
        return
    state = seed ^ (<uint64_t>restart * SPLITMIX_GAMMA)
    for blk in range(3):
        total = 0.0
        for k in range(m):
            z[blk * m + k] = 1.0 + PERTURB * _splitmix_next(&state)
            total += z[blk * m + k]
        for k in range(m):
            z[blk * m + k] = (1.0 - DELTA0) * z[blk * m + k] / total
    return


cdef int _round_rb_block(_Ws w, double[::1] z) except -1:
    """Greedy integerization of the RB block at the current CPU shares."""
    cdef int i, m = w.m, best_i
    cdef int n_rb_int = <int>w.n_rb
    cdef double[::1] zc = w.work
    cdef double total_real = 0.0, total, val, best_val
    if n_rb_int < m:
        raise ValueError(
            f"cannot give each of {m} UEs a resource block out of {n_rb_int}"
        )
    for i in range(3 * m):
        zc[i] = z[i]
    for i in range(m):
        total_real += z[i] * w.n_rb
        zc[i] = floor(z[i] * w.n_rb)
        if zc[i] < 1.0:
            zc[i] = 1.0
    cdef int target = <int>floor(total_real + 1e-9)
    if target > n_rb_int:
        target = n_rb_int
    if target < m:
        target = m

    while True:
        total = 0.0
        for i in range(m):
            total += zc[i]
        if total <= target:
            break
        best_i = -1
        best_val = INF
        for i in range(m):
            if zc[i] >= 2.0:
                zc[i] -= 1.0
                _with_n(w, zc)
                val = _obj_z(w, w.cand)
                zc[i] += 1.0
                if val < best_val:
                    best_i = i
                    best_val = val
        zc[best_i] -= 1.0
    while True:
        total = 0.0
        for i in range(m):
            total += zc[i]
        if total >= target:
            break
        best_i = -1
        best_val = INF
        for i in range(m):
            zc[i] += 1.0
            _with_n(w, zc)
            val = _obj_z(w, w.cand)
            zc[i] -= 1.0
            if val < best_val:
                best_i = i
                best_val = val
        zc[best_i] += 1.0
    for i in range(m):
        z[i] = zc[i] / w.n_rb
    return 0


cdef void _with_n(_Ws w, double[::1] n_and_f) noexcept nogil:
    """Assemble w.cand from integer counts (in n_and_f[:m]) and its f shares."""
    cdef int i, m = w.m
    for i in range(m):
        w.cand[i] = n_and_f[i] / w.n_rb
    for i in range(m, 3 * m):
        w.cand[i] = n_and_f[i]


def eval_objective(b, alpha, beta, r_p, r_s, big_r, n, f_p, f_s, int mode):
    """Mean priority-weighted latency at raw resources; see the pure twin."""
    w = _make_ws(b, alpha, beta, r_p, r_s, big_r, 1.0, 1.0, 1.0, mode)
    cdef double[::1] nv = np.ascontiguousarray(n, dtype=np.float64)
    cdef double[::1] pv = np.ascontiguousarray(f_p, dtype=np.float64)
    cdef double[::1] sv = np.ascontiguousarray(f_s, dtype=np.float64)
    return _obj_raw(w, nv, pv, sv)


def eval_gradient(b, alpha, beta, r_p, r_s, big_r, n, f_p, f_s, int mode):
    """Objective value and analytic gradient w.r.t. raw (n, f_p, f_s)."""
    w = _make_ws(b, alpha, beta, r_p, r_s, big_r, 1.0, 1.0, 1.0, mode)
    m = w.m
    z = np.concatenate([
        np.asarray(n, dtype=np.float64),
        np.asarray(f_p, dtype=np.float64),
        np.asarray(f_s, dtype=np.float64),
    ])
    g = np.empty(3 * m, dtype=np.float64)
    cdef double[::1] zv = z
    cdef double[::1] gv = g
    val = _grad_z(w, zv, gv)
    return float(val), g[:m].copy(), g[m:2 * m].copy(), g[2 * m:].copy()


cdef _Ws _make_ws(b, alpha, beta, r_p, r_s, big_r,
                  double n_rb, double fp_total, double fs_total, int mode):
    cdef _Ws w = _Ws()
    w.b = np.ascontiguousarray(b, dtype=np.float64)
    w.alpha = np.ascontiguousarray(alpha, dtype=np.float64)
    w.beta = np.ascontiguousarray(beta, dtype=np.float64)
    w.r_p = np.ascontiguousarray(r_p, dtype=np.float64)
    w.r_s = np.ascontiguousarray(r_s, dtype=np.float64)
    w.big_r = np.ascontiguousarray(big_r, dtype=np.float64)
    w.m = w.b.shape[0]
    w.n_rb = n_rb
    w.fp_total = fp_total
    w.fs_total = fs_total
    w.mode = mode
    w.grad = np.empty(3 * w.m, dtype=np.float64)
    w.cand = np.empty(3 * w.m, dtype=np.float64)
    w.work = np.empty(3 * w.m, dtype=np.float64)
    return w


def solve_allocation(b, alpha, beta, r_p, r_s, big_r,
                     double n_rb, double fp_total, double fs_total, int mode,
                     double tol, int max_iters, double barrier_init,
                     double barrier_shrink, seed, int restarts, bint round_n):
    """Full allocation pipeline; mirrors the pure backend exactly."""
    cdef _Ws w = _make_ws(b, alpha, beta, r_p, r_s, big_r, n_rb, fp_total, fs_total, mode)
    cdef int m = w.m
    cdef uint64_t useed = <uint64_t>(int(seed) & ((1 << 64) - 1))

    z_arr = np.empty(3 * m, dtype=np.float64)
    best_arr = np.empty(3 * m, dtype=np.float64)
    cdef double[::1] z = z_arr
    cdef double[::1] best = best_arr
    cdef double best_f = INF, f_val
    cdef bint best_ok = False, ok = False, ok2 = False, converged
    cdef int total_iters = 0, r, i

    for r in range(max(1, restarts)):
        _start_point(w, z, useed, r)
        total_iters += _barrier_solve(w, z, tol, max_iters, barrier_init,
                                      barrier_shrink, 0, &ok)
        f_val = _polish(w, z, 0)
        if f_val < best_f:
            for i in range(3 * m):
                best[i] = z[i]
            best_f = f_val
            best_ok = ok

    for i in range(3 * m):
        z[i] = best[i]
    converged = best_ok
    if round_n:
        _round_rb_block(w, z)
        for i in range(m, 3 * m):
            z[i] *= 1.0 - PULL_IN
        total_iters += _barrier_solve(w, z, tol, max_iters, barrier_init,
                                      barrier_shrink, m, &ok2)
        converged = converged and ok2
        _polish(w, z, m)

    n_out = np.empty(m, dtype=np.float64)
    fp_out = np.empty(m, dtype=np.float64)
    fs_out = np.empty(m, dtype=np.float64)
    for i in range(m):
        n_out[i] = z[i] * n_rb
        fp_out[i] = z[m + i] * fp_total
        fs_out[i] = z[2 * m + i] * fs_total
    for arr, budget in ((n_out, n_rb), (fp_out, fp_total), (fs_out, fs_total)):
        while float(np.sum(arr)) > budget:
            arr *= ULP_DOWN
    if round_n:
        n_out = np.round(n_out)
    cdef double[::1] nv = n_out
    cdef double[::1] pv = fp_out
    cdef double[::1] sv = fs_out
    f_final = _obj_raw(w, nv, pv, sv)
    return n_out, fp_out, fs_out, float(f_final), total_iters, bool(converged)
