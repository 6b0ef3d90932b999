"""Joint communication/computation resource allocation across UEs.

Minimizes the mean priority-weighted latency over RB counts and CPU shares
subject to the three budget constraints.  The adaptive mode optimizes the
region-weighted latency estimate (the smooth surrogate for the per-UE
min-of-two-schemes objective); the static modes force one scheme for every
UE.  RB counts are relaxed to reals, optimized by a log-barrier interior
method with gradient descent and backtracking, rounded greedily, and the CPU
shares are re-optimized once with the counts fixed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import partition
from ._backend import MODE_ADAPTIVE, MODE_DOE, MODE_DOU, impl, pure
from .model import Allocation, Instance, LatencyReport, PartitionDecision, ValidationError

__all__ = [
    "SolverConfig",
    "UeOutcome",
    "AllocationResult",
    "MODES",
    "evaluate_objective",
    "objective_gradient",
    "equal_share_allocation",
    "solve",
    "solve_adaptive",
    "solve_static",
    "round_rbs",
]

MODES = ("adaptive", "dou", "doe")
_MODE_CODE = {"adaptive": MODE_ADAPTIVE, "dou": MODE_DOU, "doe": MODE_DOE}

# Budget checks tolerate a few ulps of accumulation noise.
_BUDGET_SLACK = 1e-9


@dataclass(frozen=True)
class SolverConfig:
    """Interior-method settings.

    tol is a relative tolerance: the barrier weight is shrunk geometrically
    from barrier_init down to tol, both as multiples of the objective at the
    start point.  max_iters caps total descent iterations per barrier solve.
    seed drives the deterministic restart perturbations.
    """

    max_iters: int = 500
    tol: float = 1e-6
    barrier_init: float = 1.0
    barrier_shrink: float = 0.2
    seed: int = 0
    restarts: int = 3

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValidationError("max_iters must be >= 1")
        if not (self.tol > 0.0):
            raise ValidationError("tol must be positive")
        if not (self.barrier_init > 0.0):
            raise ValidationError("barrier_init must be positive")
        if not (0.0 < self.barrier_shrink < 1.0):
            raise ValidationError("barrier_shrink must lie in (0, 1)")
        if self.restarts < 1:
            raise ValidationError("restarts must be >= 1")


@dataclass(frozen=True)
class UeOutcome:
    """Scheme decision and latency summary for one UE at the final allocation."""

    decision: PartitionDecision
    latency: LatencyReport


@dataclass(frozen=True)
class AllocationResult:
    allocation: Allocation
    objective: float
    per_ue: tuple[UeOutcome, ...]
    converged: bool
    iterations: int


def _instance_arrays(instance: Instance):
    b = np.array([t.b for t in instance.tasks])
    alpha = np.array([t.alpha for t in instance.tasks])
    beta = np.array([t.beta for t in instance.tasks])
    r_p = np.array([c.r_p for c in instance.channels])
    r_s = np.array([c.r_s[0] for c in instance.channels])
    big_r = np.array([c.big_r for c in instance.channels])
    return b, alpha, beta, r_p, r_s, big_r


def _alloc_arrays(allocation: Allocation):
    n = np.asarray(allocation.n, dtype=float)
    f_p = np.asarray(allocation.f_p, dtype=float)
    f_s = np.asarray(allocation.f_s, dtype=float)
    return n, f_p, f_s


def _check_feasible(instance: Instance, allocation: Allocation) -> None:
    cfg = instance.config
    if len(allocation.n) != instance.num_ues:
        raise ValidationError("infeasible allocation: wrong number of UEs")
    n, f_p, f_s = _alloc_arrays(allocation)
    if f_s.ndim != 2 or f_s.shape[1] != cfg.num_secondary:
        raise ValidationError("infeasible allocation: secondary share shape mismatch")
    if math.fsum(allocation.n) > cfg.n_rb * (1.0 + _BUDGET_SLACK):
        raise ValidationError("infeasible allocation: RB budget exceeded")
    if math.fsum(allocation.f_p) > cfg.f_p_total * (1.0 + _BUDGET_SLACK):
        raise ValidationError("infeasible allocation: primary CPU budget exceeded")
    for j in range(cfg.num_secondary):
        if float(np.sum(f_s[:, j])) > cfg.f_s_total[j] * (1.0 + _BUDGET_SLACK):
            raise ValidationError(f"infeasible allocation: secondary CPU budget {j} exceeded")


def evaluate_objective(instance: Instance, allocation: Allocation, mode: str = "adaptive") -> float:
    """Mean priority-weighted latency of the chosen objective at an allocation.

    The allocation must be feasible; entries are positive by construction of
    the Allocation type.
    """
    code = _MODE_CODE[mode]
    _check_feasible(instance, allocation)
    n, f_p, f_s = _alloc_arrays(allocation)
    if instance.config.num_secondary == 1:
        b, alpha, beta, r_p, r_s, big_r = _instance_arrays(instance)
        return float(impl.eval_objective(b, alpha, beta, r_p, r_s, big_r,
                                         n, f_p, f_s[:, 0], code))
    value = pure.eval_objective_generic(instance, n, f_p, f_s, code)
    if math.isinf(value):
        raise partition.ReductionError(
            "secondary-tier reduction undefined at this allocation"
        )
    return value


def objective_gradient(instance: Instance, allocation: Allocation, mode: str = "adaptive"):
    """Objective value and analytic gradient arrays (dn, df_p, df_s).

    Single-secondary instances only; the generic path differentiates
    numerically inside its solver instead.
    """
    if instance.config.num_secondary != 1:
        raise ValidationError("analytic gradient is defined for single-secondary instances")
    code = _MODE_CODE[mode]
    _check_feasible(instance, allocation)
    n, f_p, f_s = _alloc_arrays(allocation)
    b, alpha, beta, r_p, r_s, big_r = _instance_arrays(instance)
    return impl.eval_gradient(b, alpha, beta, r_p, r_s, big_r, n, f_p, f_s[:, 0], code)


def equal_share_allocation(instance: Instance) -> Allocation:
    """Every UE gets 1/M of each budget; always feasible."""
    cfg = instance.config
    m = instance.num_ues
    return Allocation(
        n=tuple(cfg.n_rb / m for _ in range(m)),
        f_p=tuple(cfg.f_p_total / m for _ in range(m)),
        f_s=tuple(tuple(v / m for v in cfg.f_s_total) for _ in range(m)),
    )


def _per_ue_outcomes(instance: Instance, allocation: Allocation, mode: str):
    outcomes = []
    for i, (task, chan) in enumerate(zip(instance.tasks, instance.channels)):
        n_i = allocation.n[i]
        fp_i = allocation.f_p[i]
        fs_i = allocation.f_s[i]
        decision = partition.select_scheme(task, chan, n_i, fp_i, fs_i)
        if mode == "dou" and decision.x != 1:
            decision = PartitionDecision(
                x=1,
                lam=partition.opt_lambda_dou(task, chan, n_i, fp_i, fs_i),
                eta=decision.eta,
                indicator=decision.indicator,
            )
        elif mode == "doe" and decision.x != 0:
            decision = PartitionDecision(
                x=0,
                lam=partition.opt_lambda_doe(task, chan, n_i, fp_i, fs_i),
                eta=decision.eta,
                indicator=decision.indicator,
            )
        report = partition.estimated_latency(task, chan, n_i, fp_i, fs_i)
        outcomes.append(UeOutcome(decision=decision, latency=report))
    return tuple(outcomes)


def solve(instance: Instance, cfg: SolverConfig | None = None, mode: str = "adaptive",
          round_n: bool = True) -> AllocationResult:
    """Optimize the allocation for an instance under the given objective mode.

    Deterministic for fixed (instance, cfg).  RB counts in the result are
    integers unless round_n is disabled.  Never returns an allocation worse
    than its own start points; non-convergence within the iteration budget is
    reported through `converged`, with the best point found still returned.
    """
    if mode not in MODES:
        raise ValidationError(f"unknown mode {mode!r}; expected one of {MODES}")
    cfg = cfg or SolverConfig()
    sys_cfg = instance.config
    if round_n and sys_cfg.n_rb < instance.num_ues:
        raise ValidationError(
            f"cannot give each of {instance.num_ues} UEs a resource block "
            f"out of {sys_cfg.n_rb}"
        )
    code = _MODE_CODE[mode]
    if sys_cfg.num_secondary == 1:
        b, alpha, beta, r_p, r_s, big_r = _instance_arrays(instance)
        n, f_p, f_s, objective, iterations, converged = impl.solve_allocation(
            b, alpha, beta, r_p, r_s, big_r,
            float(sys_cfg.n_rb), sys_cfg.f_p_total, sys_cfg.f_s_total[0], code,
            cfg.tol, cfg.max_iters, cfg.barrier_init, cfg.barrier_shrink,
            cfg.seed, cfg.restarts, round_n,
        )
        f_s = np.asarray(f_s).reshape(-1, 1)
    else:
        n, f_p, f_s, objective, iterations, converged = pure.solve_allocation_generic(
            instance, code, cfg.tol, cfg.max_iters, cfg.barrier_init,
            cfg.barrier_shrink, cfg.seed, cfg.restarts, round_n,
        )
    allocation = Allocation(
        n=tuple(float(v) for v in n),
        f_p=tuple(float(v) for v in f_p),
        f_s=tuple(tuple(float(v) for v in row) for row in np.asarray(f_s)),
    )
    return AllocationResult(
        allocation=allocation,
        objective=float(objective),
        per_ue=_per_ue_outcomes(instance, allocation, mode),
        converged=bool(converged),
        iterations=int(iterations),
    )


def solve_adaptive(instance: Instance, cfg: SolverConfig | None = None) -> AllocationResult:
    """Adaptive allocation: optimizes the weighted latency estimate."""
    return solve(instance, cfg, mode="adaptive")


def solve_static(instance: Instance, cfg: SolverConfig | None = None, scheme: str = "dou") -> AllocationResult:
    """All-UEs-one-scheme baseline with the same solver machinery."""
    if scheme not in ("dou", "doe"):
        raise ValidationError(f"static scheme must be 'dou' or 'doe', got {scheme!r}")
    return solve(instance, cfg, mode=scheme)


def round_rbs(instance: Instance, allocation: Allocation, mode: str = "adaptive") -> Allocation:
    """Integerize the RB counts of a feasible real-valued allocation.

    Counts are floored (at least 1 per UE); the RBs lost to flooring are then
    assigned one at a time to whichever UE lowers the objective most, CPU
    shares held fixed.  An allocation that is already integer comes back
    unchanged.
    """
    _check_feasible(instance, allocation)
    cfg = instance.config
    m = instance.num_ues
    if cfg.n_rb < m:
        raise ValidationError(
            f"cannot give each of {m} UEs a resource block out of {cfg.n_rb}"
        )
    n_real = np.asarray(allocation.n, dtype=float)
    n_int = np.maximum(1.0, np.floor(n_real))
    target = max(m, min(cfg.n_rb, int(math.floor(float(np.sum(n_real)) + 1e-9))))

    def objective_at(n_vec):
        return evaluate_objective(
            instance,
            Allocation(n=tuple(n_vec), f_p=allocation.f_p, f_s=allocation.f_s),
            mode,
        )

    while float(np.sum(n_int)) > target:
        best_i, best_val = -1, math.inf
        for i in range(m):
            if n_int[i] >= 2.0:
                n_int[i] -= 1.0
                val = objective_at(n_int)
                n_int[i] += 1.0
                if val < best_val:
                    best_i, best_val = i, val
        n_int[best_i] -= 1.0
    while float(np.sum(n_int)) < target:
        best_i, best_val = -1, math.inf
        for i in range(m):
            n_int[i] += 1.0
            val = objective_at(n_int)
            n_int[i] -= 1.0
            if val < best_val:
                best_i, best_val = i, val
        n_int[best_i] += 1.0

    return Allocation(n=tuple(float(v) for v in n_int), f_p=allocation.f_p, f_s=allocation.f_s)
