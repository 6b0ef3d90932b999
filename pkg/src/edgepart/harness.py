"""Monte Carlo experiment engine.

Runs the three allocation policies (adaptive, all-DoU, all-DoE) on the same
sampled instances across a grid of mean channel-quality ratios, aggregates
paired latency and gain statistics with confidence intervals, and locates the
ratio at which the two static schemes trade places.

Trials are independent (counter-based seeding) and may execute in parallel;
results are reduced in trial-index order, so the outcome is identical for any
worker count.  EDGEPART_THREADS caps the number of worker processes.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .allocator import SolverConfig, solve
from .channel import ScenarioConfig, sample_trial
from .model import ValidationError, validate_instance

__all__ = [
    "SweepSpec",
    "SweepPoint",
    "SweepResult",
    "TrialResult",
    "InflectionEstimate",
    "FLAGGED_TRIAL_LIMIT",
    "run_trial",
    "run_sweep",
    "estimate_inflection",
    "worker_count",
]

# A sweep that loses more than this fraction of trials to solver
# non-convergence aborts instead of silently biasing its means.
FLAGGED_TRIAL_LIMIT = 1e-3

_CI_Z = 1.96  # normal-approximation 95% interval


@dataclass(frozen=True)
class SweepSpec:
    """One experiment: a scenario swept over mean-ratio grid points."""

    scenario: ScenarioConfig
    rho_grid: tuple[float, ...]
    trials: int
    solver: SolverConfig

    def __post_init__(self):
        grid = tuple(float(r) for r in self.rho_grid)
        object.__setattr__(self, "rho_grid", grid)
        if not grid:
            raise ValidationError("rho_grid must not be empty")
        for r in grid:
            if not (0.0 < r <= 1.0):
                raise ValidationError(f"rho grid values must lie in (0, 1], got {r!r}")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValidationError("rho_grid must be strictly increasing")
        if self.trials < 1:
            raise ValidationError("trials must be >= 1")


@dataclass(frozen=True)
class TrialResult:
    """Weighted mean latency of each policy on one sampled instance."""

    t_prop: float
    t_dou: float
    t_doe: float
    dou_count: int
    ue_count: int
    converged: bool


@dataclass(frozen=True)
class SweepPoint:
    rho_mean: float
    t_prop: float
    t_dou: float
    t_doe: float
    gain_dou: float
    gain_doe: float
    ci_prop: float
    ci_dou: float
    ci_doe: float
    dou_fraction: float
    flagged_trials: int


@dataclass(frozen=True)
class SweepResult:
    spec: SweepSpec
    points: tuple[SweepPoint, ...]


@dataclass(frozen=True)
class InflectionEstimate:
    """Mean ratio at which the static DoU and DoE latencies cross."""

    rho_star: float | None
    bracket: tuple[float, float] | None
    defined: bool


def run_trial(scenario: ScenarioConfig, trial_index: int, solver: SolverConfig) -> TrialResult:
    """Sample one instance and run all three policies on it (paired).

    The adaptive policy reports the weighted mean of per-UE min(t_u, t_e) at
    its allocation; each static policy reports its own optimized objective.
    A trial where any solve fails to converge is flagged for exclusion.
    """
    tasks, channels, sys_cfg = sample_trial(scenario, trial_index)
    instance = validate_instance(tasks, channels, sys_cfg)
    res_prop = solve(instance, solver, mode="adaptive")
    res_dou = solve(instance, solver, mode="dou")
    res_doe = solve(instance, solver, mode="doe")
    m = instance.num_ues
    t_prop = (
        math.fsum(t.beta * o.latency.t_star for t, o in zip(instance.tasks, res_prop.per_ue)) / m
    )
    dou_count = sum(1 for o in res_prop.per_ue if o.decision.x == 1)
    return TrialResult(
        t_prop=t_prop,
        t_dou=res_dou.objective,
        t_doe=res_doe.objective,
        dou_count=dou_count,
        ue_count=m,
        converged=res_prop.converged and res_dou.converged and res_doe.converged,
    )


def _run_trial_chunk(scenario, solver, indices):
    return [run_trial(scenario, i, solver) for i in indices]


def worker_count() -> int:
    """Trial parallelism: min(cpu count, 8), capped by EDGEPART_THREADS."""
    workers = min(os.cpu_count() or 1, 8)
    env = os.environ.get("EDGEPART_THREADS")
    if env:
        try:
            workers = min(workers, max(1, int(env)))
        except ValueError:
            raise ValidationError(f"EDGEPART_THREADS must be an integer, got {env!r}") from None
    return workers


def _aggregate(rho: float, outcomes: list[TrialResult]) -> SweepPoint:
    kept = [o for o in outcomes if o.converged]
    flagged = len(outcomes) - len(kept)
    if not kept:
        # the flag-limit check in run_sweep turns this into a loud failure
        nan = math.nan
        return SweepPoint(rho_mean=rho, t_prop=nan, t_dou=nan, t_doe=nan,
                          gain_dou=nan, gain_doe=nan, ci_prop=nan, ci_dou=nan,
                          ci_doe=nan, dou_fraction=nan, flagged_trials=flagged)
    prop = np.array([o.t_prop for o in kept])
    dou = np.array([o.t_dou for o in kept])
    doe = np.array([o.t_doe for o in kept])

    def half_width(arr):
        if len(arr) < 2:
            return 0.0
        return _CI_Z * float(np.std(arr, ddof=1)) / math.sqrt(len(arr))

    mean_prop = float(np.mean(prop))
    mean_dou = float(np.mean(dou))
    mean_doe = float(np.mean(doe))
    return SweepPoint(
        rho_mean=rho,
        t_prop=mean_prop,
        t_dou=mean_dou,
        t_doe=mean_doe,
        gain_dou=1.0 - mean_prop / mean_dou,
        gain_doe=1.0 - mean_prop / mean_doe,
        ci_prop=half_width(prop),
        ci_dou=half_width(dou),
        ci_doe=half_width(doe),
        dou_fraction=float(sum(o.dou_count for o in kept)) / float(sum(o.ue_count for o in kept)),
        flagged_trials=flagged,
    )


def run_sweep(spec: SweepSpec) -> SweepResult:
    """Run every grid point of a sweep; deterministic for a fixed spec.

    Raises RuntimeError when more than FLAGGED_TRIAL_LIMIT of all trials are
    flagged as non-converged.
    """
    workers = worker_count()
    indices = list(range(spec.trials))
    points = []
    if workers > 1 and spec.trials > 1:
        chunk = max(1, spec.trials // (workers * 4))
        chunks = [indices[i:i + chunk] for i in range(0, len(indices), chunk)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for rho in spec.rho_grid:
                scen = replace(spec.scenario, rho_mean=rho)
                results = pool.map(_run_trial_chunk, [scen] * len(chunks),
                                   [spec.solver] * len(chunks), chunks)
                outcomes = [o for batch in results for o in batch]
                points.append(_aggregate(rho, outcomes))
    else:
        for rho in spec.rho_grid:
            scen = replace(spec.scenario, rho_mean=rho)
            outcomes = [run_trial(scen, i, spec.solver) for i in indices]
            points.append(_aggregate(rho, outcomes))

    total_flagged = sum(p.flagged_trials for p in points)
    total = spec.trials * len(spec.rho_grid)
    if total_flagged > FLAGGED_TRIAL_LIMIT * total:
        raise RuntimeError(
            f"sweep aborted: {total_flagged} of {total} trials failed to converge "
            f"(limit {FLAGGED_TRIAL_LIMIT:.1%}); per-point flags: "
            f"{[p.flagged_trials for p in points]}"
        )
    return SweepResult(spec=spec, points=tuple(points))


def estimate_inflection(result: SweepResult | list[SweepPoint]) -> InflectionEstimate:
    """Locate where the static DoU and DoE mean latencies cross.

    Scans the grid for the first adjacent pair where (t_dou - t_doe) changes
    sign and interpolates linearly.  Undefined when the difference keeps one
    sign across the whole grid.
    """
    points = result.points if isinstance(result, SweepResult) else tuple(result)
    if len(points) < 2:
        raise ValidationError("inflection estimation needs at least two grid points")
    diffs = [p.t_dou - p.t_doe for p in points]
    for i in range(len(points) - 1):
        d0, d1 = diffs[i], diffs[i + 1]
        if d0 == 0.0:
            return InflectionEstimate(
                rho_star=points[i].rho_mean,
                bracket=(points[i].rho_mean, points[i].rho_mean),
                defined=True,
            )
        if d0 * d1 < 0.0:
            r0, r1 = points[i].rho_mean, points[i + 1].rho_mean
            rho_star = r0 + (r1 - r0) * d0 / (d0 - d1)
            return InflectionEstimate(rho_star=rho_star, bracket=(r0, r1), defined=True)
    if diffs[-1] == 0.0:
        rho = points[-1].rho_mean
        return InflectionEstimate(rho_star=rho, bracket=(rho, rho), defined=True)
    return InflectionEstimate(rho_star=None, bracket=None, defined=False)
