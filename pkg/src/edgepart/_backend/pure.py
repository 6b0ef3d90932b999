"""Pure-Python/numpy implementation of the allocation kernels.

This is the fallback twin of the compiled extension: same algorithm, same
constants, same deterministic restart perturbations, so the two backends can
be cross-checked.  The compiled module covers the single-secondary hot path;
this module additionally provides the generic multi-secondary path (finite
difference gradients through the secondary-tier reduction).

Scaled coordinates: every solve works on z = [n/N_rb, f_p/F_p, f_s/F_s]
blocks, each block constrained to the open simplex {z > 0, sum(z) < 1}, which
keeps gradient magnitudes comparable across resource types.  A log-barrier on
positivity and the three budget slacks is shrunk geometrically; each barrier
round runs plain gradient descent with Armijo backtracking.  After descent,
each block is scaled out to use its full budget when that does not worsen the
objective; resource-block counts are then rounded greedily and the CPU shares
re-optimized once with the counts fixed.
"""

from __future__ import annotations

import math

import numpy as np

MODE_ADAPTIVE = 0
MODE_DOU = 1
MODE_DOE = 2

# Solver constants shared verbatim with the compiled backend.
DELTA0 = 0.05          # interior margin of every start point
C1 = 1e-4              # Armijo sufficient-decrease slope
T_INIT = 0.25          # first backtracking step scale
HALVE_MAX = 60
INNER_DECREASE = 0.01  # stop a barrier round once the per-step gain <= this * mu
INNER_CAP = 80         # per-round iteration cap
PULL_IN = 0.02         # interior pull before the fixed-n re-optimization
PERTURB = 0.5          # restart weights are 1 + PERTURB * u, u in [0, 1)
Z_FLOOR = 1e-13

_M64 = (1 << 64) - 1
_SPLITMIX_GAMMA = 0x9E3779B97F4A7C15


def _splitmix_next(state: int) -> tuple[int, float]:
    """One step of splitmix64; returns (new_state, uniform in [0, 1))."""
    state = (state + _SPLITMIX_GAMMA) & _M64
    z = state
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _M64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _M64
    z = z ^ (z >> 31)
    return state, (z >> 11) * 2.0 ** -53


# ---------------------------------------------------------------------------
# objective and gradient, single secondary
# ---------------------------------------------------------------------------

def eval_objective(b, alpha, beta, r_p, r_s, big_r, n, f_p, f_s, mode):
    """Mean priority-weighted latency of the chosen objective at (n, f_p, f_s).

    mode 0 uses the region-weighted latency estimate, mode 1 the DoU optimum,
    mode 2 the DoE optimum.  All arguments are per-UE arrays; returns a float.
    """
    m = len(b)
    inv_nrp = 1.0 / (n * r_p)
    g = alpha / f_p
    h = alpha / f_s
    if mode != MODE_DOE:
        u = 1.0 / (n * r_s) + h
        du = u + g
        tu = b * (inv_nrp + g) * (u / du)
    if mode != MODE_DOU:
        v = 1.0 / big_r + h
        de = v + g
        te = b * (inv_nrp + g * (v / de))
    if mode == MODE_DOU:
        t = tu
    elif mode == MODE_DOE:
        t = te
    else:
        eta = f_p / (alpha * big_r) + f_p / f_s + 1.0
        chi = np.clip(n * r_s / big_r, 0.0, 1.0)
        w_e = (2.0 - chi) / (2.0 * eta)
        t = tu + w_e * (te - tu)
    return float(np.sum(beta * t)) / m


def eval_gradient(b, alpha, beta, r_p, r_s, big_r, n, f_p, f_s, mode):
    """Objective value and its analytic gradient w.r.t. (n, f_p, f_s)."""
    m = len(b)
    inv_nrp = 1.0 / (n * r_p)
    inv_nrs = 1.0 / (n * r_s)
    g = alpha / f_p
    h = alpha / f_s

    # DoU branch
    u = inv_nrs + h
    du = u + g
    lam_u = u / du
    a_fac = inv_nrp + g
    tu = b * a_fac * lam_u
    dtu_dn = b * (-inv_nrp / n * lam_u + a_fac * (g / (du * du)) * (-inv_nrs / n))
    dtu_dp = b * (-g / f_p * lam_u + a_fac * (u * g) / (f_p * du * du))
    dtu_ds = b * a_fac * (g / (du * du)) * (-h / f_s)

    # DoE branch
    v = 1.0 / big_r + h
    de = v + g
    lam_e = v / de
    te = b * (inv_nrp + g * lam_e)
    dte_dn = -b * inv_nrp / n
    dte_dp = -b * g * v * v / (f_p * de * de)
    dte_ds = -b * g * g * h / (f_s * de * de)

    if mode == MODE_DOU:
        t, dt_dn, dt_dp, dt_ds = tu, dtu_dn, dtu_dp, dtu_ds
    elif mode == MODE_DOE:
        t, dt_dn, dt_dp, dt_ds = te, dte_dn, dte_dp, dte_ds
    else:
        eta = f_p / (alpha * big_r) + f_p / f_s + 1.0
        x_raw = n * r_s / big_r
        chi = np.minimum(x_raw, 1.0)
        w_e = (2.0 - chi) / (2.0 * eta)
        dchi_dn = np.where(x_raw < 1.0, r_s / big_r, 0.0)
        deta_dp = 1.0 / (alpha * big_r) + 1.0 / f_s
        deta_ds = -f_p / (f_s * f_s)
        dwe_dn = -dchi_dn / (2.0 * eta)
        dwe_dp = -w_e * deta_dp / eta
        dwe_ds = -w_e * deta_ds / eta
        diff = te - tu
        t = tu + w_e * diff
        dt_dn = dtu_dn + dwe_dn * diff + w_e * (dte_dn - dtu_dn)
        dt_dp = dtu_dp + dwe_dp * diff + w_e * (dte_dp - dtu_dp)
        dt_ds = dtu_ds + dwe_ds * diff + w_e * (dte_ds - dtu_ds)

    w = beta / m
    value = float(np.sum(w * t))
    return value, w * dt_dn, w * dt_dp, w * dt_ds


# ---------------------------------------------------------------------------
# generic multi-secondary objective (slow path, shared by any backend)
# ---------------------------------------------------------------------------

def eval_objective_generic(instance, n, f_p, f_s, mode):
    """Objective for an instance with any number of secondaries.

    f_s has shape (M, N).  Returns +inf when the secondary-tier reduction is
    undefined at this point, which the line search treats as infeasible.
    """
    from .. import partition
    from ..partition import ReductionError

    total = 0.0
    m = instance.num_ues
    for i, (task, chan) in enumerate(zip(instance.tasks, instance.channels)):
        try:
            if mode == MODE_DOU:
                t = partition.min_latency_dou(task, chan, n[i], f_p[i], f_s[i])
            elif mode == MODE_DOE:
                t = partition.min_latency_doe(task, chan, n[i], f_p[i], f_s[i])
            else:
                t = partition.estimated_latency(task, chan, n[i], f_p[i], f_s[i]).t_tilde
        except ReductionError:
            return math.inf
        total += task.beta * t
    return total / m


# ---------------------------------------------------------------------------
# barrier solver
# ---------------------------------------------------------------------------

class _Problem:
    """Bundles instance arrays, budgets and block layout for one solve."""

    def __init__(self, b, alpha, beta, r_p, r_s, big_r, n_rb, fp_total, fs_total, mode):
        self.b = np.asarray(b, dtype=float)
        self.alpha = np.asarray(alpha, dtype=float)
        self.beta = np.asarray(beta, dtype=float)
        self.r_p = np.asarray(r_p, dtype=float)
        self.r_s = np.asarray(r_s, dtype=float)
        self.big_r = np.asarray(big_r, dtype=float)
        self.m = len(self.b)
        self.n_rb = float(n_rb)
        self.fp_total = float(fp_total)
        self.fs_total = float(fs_total)
        self.mode = mode

    def objective(self, z):
        m = self.m
        return eval_objective(
            self.b, self.alpha, self.beta, self.r_p, self.r_s, self.big_r,
            z[:m] * self.n_rb, z[m:2 * m] * self.fp_total, z[2 * m:] * self.fs_total,
            self.mode,
        )

    def gradient(self, z):
        m = self.m
        value, gn, gp, gs = eval_gradient(
            self.b, self.alpha, self.beta, self.r_p, self.r_s, self.big_r,
            z[:m] * self.n_rb, z[m:2 * m] * self.fp_total, z[2 * m:] * self.fs_total,
            self.mode,
        )
        return value, np.concatenate([gn * self.n_rb, gp * self.fp_total, gs * self.fs_total])


def _phi(prob: _Problem, z, mu, lo):
    """Barrier-augmented objective; +inf outside the strict interior.

    lo is the first free coordinate (0 for a full solve, M when the RB block
    is frozen); frozen coordinates contribute no barrier terms.
    """
    m = prob.m
    zf = z[lo:]
    if zf.min() <= Z_FLOOR:
        return math.inf, math.inf
    barrier = -float(np.sum(np.log(zf)))
    for blk in range(lo // m, 3):
        slack = 1.0 - float(np.sum(z[blk * m:(blk + 1) * m]))
        if slack <= Z_FLOOR:
            return math.inf, math.inf
        barrier -= math.log(slack)
    f_val = prob.objective(z)
    return f_val + mu * barrier, f_val


def _grad_phi(prob: _Problem, z, mu, lo):
    m = prob.m
    _, g = prob.gradient(z)
    for blk in range(lo // m, 3):
        sl = 1.0 - float(np.sum(z[blk * m:(blk + 1) * m]))
        g[blk * m:(blk + 1) * m] += mu * (1.0 / sl - 1.0 / z[blk * m:(blk + 1) * m])
    if lo:
        g[:lo] = 0.0
    return g


def _descend(prob, z, mu, budget, lo):
    """Gradient descent with backtracking until the round is centered enough."""
    iters = 0
    t_prev = T_INIT
    phi, _ = _phi(prob, z, mu, lo)
    while iters < INNER_CAP and iters < budget:
        g = _grad_phi(prob, z, mu, lo)
        gnorm2 = float(np.dot(g, g))
        iters += 1
        t = min(1.0, 2.0 * t_prev)
        accepted = False
        for _ in range(HALVE_MAX):
            zc = z - t * g
            phic, _ = _phi(prob, zc, mu, lo)
            if phic <= phi - C1 * t * gnorm2:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        decrease = phi - phic
        z = zc
        phi = phic
        t_prev = t
        if decrease <= INNER_DECREASE * mu:
            break
    return z, iters


def _barrier_solve(prob, z0, tol, max_iters, barrier_init, barrier_shrink, lo=0):
    f0 = prob.objective(z0)
    mu = barrier_init * f0
    mu_final = tol * f0
    z = z0
    total = 0
    converged = True
    while True:
        z, it = _descend(prob, z, mu, max_iters - total, lo)
        total += it
        if mu <= mu_final:
            break
        if total >= max_iters:
            converged = False
            break
        mu *= barrier_shrink
    return z, total, converged


def _scale_block_to_budget(z, blk, m):
    """Return z with one block rescaled to sum exactly to 1 (never above)."""
    zc = z.copy()
    s = float(np.sum(zc[blk * m:(blk + 1) * m]))
    if s <= 0.0:
        return zc
    zc[blk * m:(blk + 1) * m] /= s
    while float(np.sum(zc[blk * m:(blk + 1) * m])) > 1.0:
        zc[blk * m:(blk + 1) * m] *= 1.0 - 2.0 ** -52
    return zc

def _polish(prob, z, lo=0):
    """Scale each free block out to its full budget where that helps."""
    f_cur = prob.objective(z)
    for _ in range(2):
        for blk in range(lo // prob.m, 3):
            zc = _scale_block_to_budget(z, blk, prob.m)
            f_new = prob.objective(zc)
            if f_new <= f_cur:
                z, f_cur = zc, f_new
    return z, f_cur


def _start_point(m, seed, restart):
    """Deterministic strictly-interior start: equal share, then seeded tilts."""
    z = np.empty(3 * m)
    if restart == 0:
        z[:] = (1.0 - DELTA0) / m
        return z
    state = (seed ^ ((restart * _SPLITMIX_GAMMA) & _M64)) & _M64
    for blk in range(3):
        w = np.empty(m)
        for k in range(m):
            state, val = _splitmix_next(state)
            w[k] = 1.0 + PERTURB * val
        z[blk * m:(blk + 1) * m] = (1.0 - DELTA0) * w / float(np.sum(w))
    return z


def _round_rb_block(prob, z):
    """Greedy integerization of the RB block at the current CPU shares.

    Floors every count (at least 1 each), then moves single RBs to whichever
    UE improves the objective most until the floor-lost blocks are used up.
    """
    m = prob.m
    n_real = z[:m] * prob.n_rb
    n_rb_int = int(prob.n_rb)
    if n_rb_int < m:
        raise ValueError(f"cannot give each of {m} UEs a resource block out of {n_rb_int}")
    n_int = np.maximum(1.0, np.floor(n_real))
    target = max(m, min(n_rb_int, int(math.floor(float(np.sum(n_real)) + 1e-9))))

    def obj_at(n_vec):
        zc = z.copy()
        zc[:m] = n_vec / prob.n_rb
        return prob.objective(zc)

    while float(np.sum(n_int)) > target:
        best_i, best_val = -1, math.inf
        for i in range(m):
            if n_int[i] >= 2.0:
                n_int[i] -= 1.0
                val = obj_at(n_int)
                n_int[i] += 1.0
                if val < best_val:
                    best_i, best_val = i, val
        n_int[best_i] -= 1.0
    while float(np.sum(n_int)) < target:
        best_i, best_val = -1, math.inf
        for i in range(m):
            n_int[i] += 1.0
            val = obj_at(n_int)
            n_int[i] -= 1.0
            if val < best_val:
                best_i, best_val = i, val
        n_int[best_i] += 1.0

    zc = z.copy()
    zc[:m] = n_int / prob.n_rb
    return zc


def _extract(prob, z):
    """Convert scaled coordinates to raw resources, capping budget roundoff."""
    m = prob.m
    n = z[:m] * prob.n_rb
    f_p = z[m:2 * m] * prob.fp_total
    f_s = z[2 * m:] * prob.fs_total
    for arr, budget in ((n, prob.n_rb), (f_p, prob.fp_total), (f_s, prob.fs_total)):
        while float(np.sum(arr)) > budget:
            arr *= 1.0 - 2.0 ** -52
    return n, f_p, f_s


def solve_allocation(b, alpha, beta, r_p, r_s, big_r, n_rb, fp_total, fs_total,
                     mode, tol, max_iters, barrier_init, barrier_shrink, seed,
                     restarts, round_n):
    """Full allocation pipeline for a single-secondary instance.

    Returns (n, f_p, f_s, objective, iterations, converged).  Deterministic
    for fixed inputs; restart tilts derive from `seed` via splitmix64.
    """
    prob = _Problem(b, alpha, beta, r_p, r_s, big_r, n_rb, fp_total, fs_total, mode)
    m = prob.m

    best_z = None
    best_f = math.inf
    best_ok = False
    total_iters = 0
    for r in range(max(1, restarts)):
        z0 = _start_point(m, seed, r)
        z, iters, ok = _barrier_solve(prob, z0, tol, max_iters, barrier_init, barrier_shrink)
        total_iters += iters
        z, f_val = _polish(prob, z)
        if f_val < best_f:
            best_z, best_f, best_ok = z, f_val, ok

    z = best_z
    converged = best_ok
    if round_n:
        z = _round_rb_block(prob, z)
        zf = z.copy()
        zf[m:] *= 1.0 - PULL_IN
        zf, iters2, ok2 = _barrier_solve(
            prob, zf, tol, max_iters, barrier_init, barrier_shrink, lo=m
        )
        total_iters += iters2
        converged = converged and ok2
        z, _ = _polish(prob, zf, lo=m)

    n, f_p, f_s = _extract(prob, z)
    if round_n:
        n = np.round(n)  # exact integers survive the roundoff cap
    f_final = eval_objective(prob.b, prob.alpha, prob.beta, prob.r_p, prob.r_s,
                             prob.big_r, n, f_p, f_s, mode)
    return n, f_p, f_s, float(f_final), total_iters, converged


# ---------------------------------------------------------------------------
# generic multi-secondary solve (numpy only; no compiled counterpart)
# ---------------------------------------------------------------------------

class _GenericProblem:
    """Block layout [n | f_p | f_s(:,0) | ... | f_s(:,N-1)] over an Instance."""

    def __init__(self, instance, mode):
        self.instance = instance
        self.mode = mode
        self.m = instance.num_ues
        self.n_sec = instance.config.num_secondary
        self.n_rb = float(instance.config.n_rb)
        self.fp_total = instance.config.f_p_total
        self.fs_totals = instance.config.f_s_total
        self.nblocks = 2 + self.n_sec

    def raw(self, z):
        m = self.m
        n = z[:m] * self.n_rb
        f_p = z[m:2 * m] * self.fp_total
        f_s = np.empty((m, self.n_sec))
        for j in range(self.n_sec):
            f_s[:, j] = z[(2 + j) * m:(3 + j) * m] * self.fs_totals[j]
        return n, f_p, f_s

    def objective(self, z):
        n, f_p, f_s = self.raw(z)
        return eval_objective_generic(self.instance, n, f_p, f_s, self.mode)

    def fd_gradient(self, z, lo):
        g = np.zeros_like(z)
        for k in range(lo, len(z)):
            h = 1e-6 * max(z[k], 1e-3)
            zp = z.copy(); zp[k] += h
            zm = z.copy(); zm[k] -= h
            g[k] = (self.objective(zp) - self.objective(zm)) / (2.0 * h)
        return g


def _phi_generic(prob, z, mu, lo):
    m = prob.m
    zf = z[lo:]
    if zf.min() <= Z_FLOOR:
        return math.inf, math.inf
    barrier = -float(np.sum(np.log(zf)))
    for blk in range(lo // m, prob.nblocks):
        slack = 1.0 - float(np.sum(z[blk * m:(blk + 1) * m]))
        if slack <= Z_FLOOR:
            return math.inf, math.inf
        barrier -= math.log(slack)
    f_val = prob.objective(z)
    if math.isinf(f_val):
        return math.inf, math.inf
    return f_val + mu * barrier, f_val


def _descend_generic(prob, z, mu, budget, lo):
    iters = 0
    t_prev = T_INIT
    phi, _ = _phi_generic(prob, z, mu, lo)
    while iters < INNER_CAP and iters < budget:
        g = prob.fd_gradient(z, lo)
        m = prob.m
        for blk in range(lo // m, prob.nblocks):
            sl = 1.0 - float(np.sum(z[blk * m:(blk + 1) * m]))
            g[blk * m:(blk + 1) * m] += mu * (1.0 / sl - 1.0 / z[blk * m:(blk + 1) * m])
        gnorm2 = float(np.dot(g, g))
        iters += 1
        t = min(1.0, 2.0 * t_prev)
        accepted = False
        for _ in range(HALVE_MAX):
            zc = z - t * g
            phic, _ = _phi_generic(prob, zc, mu, lo)
            if phic <= phi - C1 * t * gnorm2:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        decrease = phi - phic
        z, phi, t_prev = zc, phic, t
        if decrease <= INNER_DECREASE * mu:
            break
    return z, iters


def solve_allocation_generic(instance, mode, tol, max_iters, barrier_init,
                             barrier_shrink, seed, restarts, round_n):
    """Allocation pipeline for instances with any number of secondaries."""
    from ..partition import ReductionError

    prob = _GenericProblem(instance, mode)
    m, nb = prob.m, prob.nblocks
    dim = nb * m

    def start(restart):
        z = np.empty(dim)
        if restart == 0:
            z[:] = (1.0 - DELTA0) / m
            return z
        state = (seed ^ ((restart * _SPLITMIX_GAMMA) & _M64)) & _M64
        for blk in range(nb):
            w = np.empty(m)
            for k in range(m):
                state, val = _splitmix_next(state)
                w[k] = 1.0 + PERTURB * val
            z[blk * m:(blk + 1) * m] = (1.0 - DELTA0) * w / float(np.sum(w))
        return z

    def barrier(z0, lo):
        f0 = prob.objective(z0)
        if math.isinf(f0):
            raise ReductionError("secondary-tier reduction undefined at the start point")
        mu = barrier_init * f0
        mu_final = tol * f0
        z, total, converged = z0, 0, True
        while True:
            z, it = _descend_generic(prob, z, mu, max_iters - total, lo)
            total += it
            if mu <= mu_final:
                break
            if total >= max_iters:
                converged = False
                break
            mu *= barrier_shrink
        return z, total, converged

    def polish(z, lo):
        f_cur = prob.objective(z)
        for _ in range(2):
            for blk in range(lo // m, nb):
                zc = _scale_block_to_budget(z, blk, m)
                f_new = prob.objective(zc)
                if f_new <= f_cur:
                    z, f_cur = zc, f_new
        return z, f_cur

    best_z, best_f, best_ok = None, math.inf, False
    total_iters = 0
    for r in range(max(1, restarts)):
        z, iters, ok = barrier(start(r), 0)
        total_iters += iters
        z, f_val = polish(z, 0)
        if f_val < best_f:
            best_z, best_f, best_ok = z, f_val, ok
    z, converged = best_z, best_ok

    if round_n:
        n_rb_int = int(prob.n_rb)
        if n_rb_int < m:
            raise ValueError(f"cannot give each of {m} UEs a resource block out of {n_rb_int}")
        n_real = z[:m] * prob.n_rb
        n_int = np.maximum(1.0, np.floor(n_real))
        target = max(m, min(n_rb_int, int(math.floor(float(np.sum(n_real)) + 1e-9))))

        def obj_with_n(n_vec):
            zc = z.copy()
            zc[:m] = n_vec / prob.n_rb
            return prob.objective(zc)

        while float(np.sum(n_int)) > target:
            best_i, best_val = -1, math.inf
            for i in range(m):
                if n_int[i] >= 2.0:
                    n_int[i] -= 1.0
                    val = obj_with_n(n_int)
                    n_int[i] += 1.0
                    if val < best_val:
                        best_i, best_val = i, val
            n_int[best_i] -= 1.0
        while float(np.sum(n_int)) < target:
            best_i, best_val = -1, math.inf
            for i in range(m):
                n_int[i] += 1.0
                val = obj_with_n(n_int)
                n_int[i] -= 1.0
                if val < best_val:
                    best_i, best_val = i, val
            n_int[best_i] += 1.0
        z[:m] = n_int / prob.n_rb

        zf = z.copy()
        zf[m:] *= 1.0 - PULL_IN
        zf, iters2, ok2 = barrier(zf, m)
        total_iters += iters2
        converged = converged and ok2
        z, _ = polish(zf, m)

    n, f_p, f_s = prob.raw(z)
    while float(np.sum(n)) > prob.n_rb:
        n *= 1.0 - 2.0 ** -52
    if round_n:
        n = np.round(n)
    while float(np.sum(f_p)) > prob.fp_total:
        f_p *= 1.0 - 2.0 ** -52
    for j in range(prob.n_sec):
        while float(np.sum(f_s[:, j])) > prob.fs_totals[j]:
            f_s[:, j] *= 1.0 - 2.0 ** -52
    f_final = eval_objective_generic(instance, n, f_p, f_s, mode)
    if math.isinf(f_final):
        raise ReductionError("secondary-tier reduction undefined at the final allocation")
    return n, f_p, f_s, float(f_final), total_iters, converged
