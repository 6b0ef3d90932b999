"""Domain types and instance validation for the two-tier edge offloading model.

Unit conventions, used everywhere without exception: rates in bits/s,
CPU capacities in cycles/s, task sizes in bits, time in seconds.
All types are immutable value objects and safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

__all__ = [
    "ValidationError",
    "TaskSpec",
    "SystemConfig",
    "ChannelState",
    "Allocation",
    "PartitionDecision",
    "LatencyReport",
    "Instance",
    "validate_instance",
]

BETA_SUM_TOL = 1e-12


class ValidationError(ValueError):
    """Raised when an instance or one of its parts violates a model invariant."""


def _require_positive(name: str, value: float) -> None:
    if not (value > 0.0) or math.isinf(value) or math.isnan(value):
        raise ValidationError(f"{name} must be positive and finite, got {value!r}")


@dataclass(frozen=True)
class TaskSpec:
    """One UE's computation task.

    b: input data size in bits.
    alpha: computation intensity in cycles/bit.
    beta: priority weight (dimensionless); None means "use uniform 1/M",
        filled in by validate_instance.
    """

    b: float
    alpha: float
    beta: float | None = None

    def __post_init__(self):
        _require_positive("b", self.b)
        _require_positive("alpha", self.alpha)
        if self.beta is not None:
            _require_positive("beta", self.beta)


@dataclass(frozen=True)
class SystemConfig:
    """System-wide resource budget.

    n_rb: total number of uplink resource blocks.
    f_p_total: primary edge-server capacity, cycles/s.
    f_s_total: secondary edge-server capacities, cycles/s, one per secondary.
    rb_bandwidth_hz: bandwidth of one resource block.
    """

    n_rb: int
    f_p_total: float
    f_s_total: tuple[float, ...]
    rb_bandwidth_hz: float = 180e3

    def __post_init__(self):
        if not isinstance(self.n_rb, int) or self.n_rb < 1:
            raise ValidationError(f"n_rb must be an integer >= 1, got {self.n_rb!r}")
        _require_positive("f_p_total", self.f_p_total)
        fs = tuple(float(v) for v in self.f_s_total)
        object.__setattr__(self, "f_s_total", fs)
        if not fs:
            raise ValidationError("f_s_total must contain at least one secondary capacity")
        for j, v in enumerate(fs):
            _require_positive(f"f_s_total[{j}]", v)
        _require_positive("rb_bandwidth_hz", self.rb_bandwidth_hz)

    @property
    def num_secondary(self) -> int:
        return len(self.f_s_total)


@dataclass(frozen=True)
class ChannelState:
    """Per-UE link rates.

    r_p: per-RB uplink rate to the primary ES, bits/s.
    r_s: per-RB uplink rate(s) to the secondary ES(es), bits/s, length N.
    big_r: forwarding-link rate between primary and secondary ES, bits/s.

    Only positivity is checked here; the cross-field constraint
    r_s <= r_p is enforced by validate_instance so that the pure math in
    :mod:`edgepart.partition` stays usable on arbitrary positive inputs.
    """

    r_p: float
    r_s: tuple[float, ...]
    big_r: float

    def __post_init__(self):
        _require_positive("r_p", self.r_p)
        rs = tuple(float(v) for v in self.r_s)
        object.__setattr__(self, "r_s", rs)
        if not rs:
            raise ValidationError("r_s must contain at least one secondary rate")
        for j, v in enumerate(rs):
            _require_positive(f"r_s[{j}]", v)
        _require_positive("big_r", self.big_r)

    @property
    def num_secondary(self) -> int:
        return len(self.r_s)


@dataclass(frozen=True)
class Allocation:
    """Per-UE resource assignment.

    n: RBs per UE (real-valued during optimization, integer after rounding).
    f_p: primary CPU share per UE, cycles/s.
    f_s: secondary CPU share per UE and per secondary ES, cycles/s (M x N).
    """

    n: tuple[float, ...]
    f_p: tuple[float, ...]
    f_s: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "n", tuple(float(v) for v in self.n))
        object.__setattr__(self, "f_p", tuple(float(v) for v in self.f_p))
        object.__setattr__(self, "f_s", tuple(tuple(float(v) for v in row) for row in self.f_s))
        m = len(self.n)
        if not (m == len(self.f_p) == len(self.f_s)):
            raise ValidationError("allocation fields must have one entry per UE")
        for i in range(m):
            _require_positive(f"n[{i}]", self.n[i])
            _require_positive(f"f_p[{i}]", self.f_p[i])
            for j, v in enumerate(self.f_s[i]):
                _require_positive(f"f_s[{i}][{j}]", v)


@dataclass(frozen=True)
class PartitionDecision:
    """Outcome of the scheme-selection rule for one UE.

    x: 1 selects partitioning at the UE (DoU), 0 at the primary ES (DoE).
    lam: task split ratio in [0, 1], the fraction executed at the primary ES.
    eta: threshold factor f_p/(alpha*R) + f_p/f_s + 1 (always >= 1).
    indicator: value of the selection expression n*r_s/R + eta*r_s/r_p - 1.

    For decisions produced by the selection rule, x == 1 iff indicator >= 0.
    Static (forced) solves construct decisions where x is overridden, so the
    coupling is deliberately not enforced here.
    """

    x: int
    lam: float
    eta: float
    indicator: float

    def __post_init__(self):
        if self.x not in (0, 1):
            raise ValidationError(f"x must be 0 or 1, got {self.x!r}")
        if not (0.0 <= self.lam <= 1.0):
            raise ValidationError(f"lam must lie in [0, 1], got {self.lam!r}")
        if not (self.eta >= 1.0):
            raise ValidationError(f"eta must be >= 1, got {self.eta!r}")


@dataclass(frozen=True)
class LatencyReport:
    """Per-UE latency summary at a given allocation.

    t_u / t_e: minimal latency under DoU / DoE, seconds.
    t_star: min(t_u, t_e).
    t_tilde: estimated dynamic latency (region-weighted mix of t_u and t_e).
    """

    t_u: float
    t_e: float
    t_star: float
    t_tilde: float

    def __post_init__(self):
        _require_positive("t_u", self.t_u)
        _require_positive("t_e", self.t_e)


@dataclass(frozen=True)
class Instance:
    """A validated system instance: one task and channel per UE plus the budget."""

    tasks: tuple[TaskSpec, ...]
    channels: tuple[ChannelState, ...]
    config: SystemConfig

    @property
    def num_ues(self) -> int:
        return len(self.tasks)


def validate_instance(tasks, channels, cfg: SystemConfig) -> Instance:
    """Check every model invariant and return the assembled instance.

    Raises ValidationError on: mismatched list lengths, non-positive fields
    (already rejected at construction), any r_s[j] > r_p, secondary-count
    mismatches against the config, and priority weights not summing to 1.
    When no task carries a weight, uniform weights 1/M are filled in.
    """
    tasks = tuple(tasks)
    channels = tuple(channels)
    if len(tasks) == 0:
        raise ValidationError("instance must contain at least one UE")
    if len(tasks) != len(channels):
        raise ValidationError(
            f"dimension mismatch: {len(tasks)} tasks vs {len(channels)} channels"
        )
    m = len(tasks)
    n_sec = cfg.num_secondary
    for i, chan in enumerate(channels):
        if chan.num_secondary != n_sec:
            raise ValidationError(
                f"dimension mismatch: channel {i} has {chan.num_secondary} secondary "
                f"rates, config declares {n_sec}"
            )
        for j, rs in enumerate(chan.r_s):
            if rs > chan.r_p:
                raise ValidationError(
                    f"r_s exceeds r_p for UE {i}: r_s[{j}]={rs!r} > r_p={chan.r_p!r}"
                )

    betas = [t.beta for t in tasks]
    if all(b is None for b in betas):
        tasks = tuple(replace(t, beta=1.0 / m) for t in tasks)
    elif any(b is None for b in betas):
        raise ValidationError("either all or none of the priority weights may be unset")
    total = math.fsum(t.beta for t in tasks)
    if abs(total - 1.0) > BETA_SUM_TOL:
        raise ValidationError(f"beta sum != 1: weights sum to {total!r}")

    return Instance(tasks=tasks, channels=channels, config=cfg)
