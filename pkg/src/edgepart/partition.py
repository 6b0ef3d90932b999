"""Closed-form latency math for two-tier offloading.

Implements the two partitioning schemes (split at the UE, "DoU", or at the
primary edge server, "DoE"), their optimal split ratios via the
equal-finish-time condition, the exact selection rule between them, the
region-weighted latency estimate used as the allocation surrogate, and the
reduction of a multi-secondary system to effective single-secondary scalars.

Everything here is a pure function of its arguments.  The low-level
``*_formula`` helpers operate on floats or numpy arrays alike; the public
operations take the domain types from :mod:`edgepart.model`.
"""

from __future__ import annotations

import numpy as np

from .model import (
    ChannelState,
    LatencyReport,
    PartitionDecision,
    TaskSpec,
    ValidationError,
)
from dataclasses import dataclass

__all__ = [
    "SchemeWeights",
    "GenericReduction",
    "ReductionError",
    "latency_dou",
    "latency_doe",
    "opt_lambda_dou",
    "opt_lambda_doe",
    "min_latency_dou",
    "min_latency_doe",
    "select_scheme",
    "selection_indicator",
    "scheme_weights",
    "estimated_latency",
    "reduce_generic",
]


class ReductionError(ValueError):
    """Raised when the multi-secondary reduction is undefined for the inputs."""


@dataclass(frozen=True)
class SchemeWeights:
    """Region weights of the two schemes in the selection-rule geometry.

    w_u / w_e are the weights attached to the DoU / DoE minimal latencies in
    the estimated dynamic latency; s_u / s_e are the underlying trapezoid
    areas from which they derive.  w_u + w_e == 1.
    """

    w_u: float
    w_e: float
    s_u: float
    s_e: float


@dataclass(frozen=True)
class GenericReduction:
    """Effective single-secondary scalars for an N-secondary system.

    lambda_s_u / lambda_s_e: inner split factors for the secondary tier under
    the DoU / DoE schemes.  f_s_eff and r_s_eff replace f_s and r_s in every
    single-secondary formula.  For N == 1 the reduction is the identity.
    """

    lambda_s_u: float
    lambda_s_e: float
    f_s_eff: float
    r_s_eff: float


# ---------------------------------------------------------------------------
# array-capable formula layer
# ---------------------------------------------------------------------------

def latency_dou_formula(b, alpha, r_p, r_s, n, f_p, f_s, lam):
    """Task completion time when the UE splits locally and uplinks both parts."""
    uplink_primary = lam * b / (n * r_p)
    finish_primary = lam * alpha * b / f_p
    finish_secondary = (1.0 - lam) * b / (n * r_s) + (1.0 - lam) * alpha * b / f_s
    return uplink_primary + np.maximum(finish_primary, finish_secondary)


def latency_doe_formula(b, alpha, r_p, r_s, big_r, n, f_p, f_s, lam):
    """Task completion time when the whole task is uplinked and split at the ES."""
    uplink = b / (n * r_p)
    finish_primary = lam * alpha * b / f_p
    finish_secondary = (1.0 - lam) * b / big_r + (1.0 - lam) * alpha * b / f_s
    return uplink + np.maximum(finish_primary, finish_secondary)


def opt_lambda_dou_formula(alpha, r_s, n, f_p, f_s):
    """Equal-finish-time split ratio for the DoU scheme."""
    u = 1.0 / (n * r_s) + alpha / f_s
    return u / (u + alpha / f_p)


def opt_lambda_doe_formula(alpha, big_r, f_p, f_s):
    """Equal-finish-time split ratio for the DoE scheme."""
    v = 1.0 / big_r + alpha / f_s
    return v / (v + alpha / f_p)


def min_latency_dou_formula(b, alpha, r_p, r_s, n, f_p, f_s):
    """Minimal DoU latency: both servers finish together at the optimal split."""
    lam = opt_lambda_dou_formula(alpha, r_s, n, f_p, f_s)
    return b * (1.0 / (n * r_p) + alpha / f_p) * lam


def min_latency_doe_formula(b, alpha, r_p, big_r, n, f_p, f_s):
    """Minimal DoE latency at the optimal split."""
    lam = opt_lambda_doe_formula(alpha, big_r, f_p, f_s)
    return b * (1.0 / (n * r_p) + alpha / f_p * lam)


def selection_indicator(alpha, r_p, r_s, big_r, n, f_p, f_s):
    """Threshold factor and selection value deciding between the two schemes.

    Returns (eta, indicator) where eta = f_p/(alpha*R) + f_p/f_s + 1 and
    indicator = n*r_s/R + eta*r_s/r_p - 1.  The sign of the indicator equals
    the sign of (minimal DoE latency - minimal DoU latency) exactly; a
    non-negative value selects DoU.  The indicator is deliberately never
    clamped, unlike the ratio inside ``scheme_weight_e_formula``.
    """
    eta = f_p / (alpha * big_r) + f_p / f_s + 1.0
    indicator = n * r_s / big_r + eta * r_s / r_p - 1.0
    return eta, indicator


def scheme_weight_e_formula(n_rs_over_big_r, eta):
    """DoE region weight: trapezoid share of the selection geometry.

    The geometry assumes n*r_s/R <= 1, so the ratio is clamped into [0, 1]
    before use; eta must be >= 1.
    """
    x = np.clip(n_rs_over_big_r, 0.0, 1.0)
    return (2.0 - x) / (2.0 * eta)


# ---------------------------------------------------------------------------
# public operations on domain types
# ---------------------------------------------------------------------------

def _effective_scalars(task: TaskSpec, chan: ChannelState, n: float, f_s) -> tuple[float, float]:
    """Collapse the secondary tier to one (r_s, f_s) pair, reducing if N > 1."""
    f_s_row = _as_row(f_s)
    if chan.num_secondary != len(f_s_row):
        raise ValidationError(
            f"dimension mismatch: {chan.num_secondary} secondary rates vs "
            f"{len(f_s_row)} secondary CPU shares"
        )
    if len(f_s_row) == 1:
        return chan.r_s[0], f_s_row[0]
    red = reduce_generic(task, chan, n, f_s_row)
    return red.r_s_eff, red.f_s_eff


def _as_row(f_s) -> tuple[float, ...]:
    if isinstance(f_s, (int, float)):
        return (float(f_s),)
    return tuple(float(v) for v in f_s)


def latency_dou(task: TaskSpec, chan: ChannelState, n: float, f_p: float, f_s, lam: float) -> float:
    """DoU completion time at a given split ratio."""
    if not (0.0 <= lam <= 1.0):
        raise ValidationError(f"lam must lie in [0, 1], got {lam!r}")
    r_s, f_s_eff = _effective_scalars(task, chan, n, f_s)
    return float(latency_dou_formula(task.b, task.alpha, chan.r_p, r_s, n, f_p, f_s_eff, lam))


def latency_doe(task: TaskSpec, chan: ChannelState, n: float, f_p: float, f_s, lam: float) -> float:
    """DoE completion time at a given split ratio."""
    if not (0.0 <= lam <= 1.0):
        raise ValidationError(f"lam must lie in [0, 1], got {lam!r}")
    r_s, f_s_eff = _effective_scalars(task, chan, n, f_s)
    return float(
        latency_doe_formula(task.b, task.alpha, chan.r_p, r_s, chan.big_r, n, f_p, f_s_eff, lam)
    )


def opt_lambda_dou(task: TaskSpec, chan: ChannelState, n: float, f_p: float, f_s) -> float:
    """Optimal DoU split ratio; both servers finish simultaneously there."""
    r_s, f_s_eff = _effective_scalars(task, chan, n, f_s)
    return float(opt_lambda_dou_formula(task.alpha, r_s, n, f_p, f_s_eff))


def opt_lambda_doe(task: TaskSpec, chan: ChannelState, n: float, f_p: float, f_s) -> float:
    """Optimal DoE split ratio."""
    _, f_s_eff = _effective_scalars(task, chan, n, f_s)
    return float(opt_lambda_doe_formula(task.alpha, chan.big_r, f_p, f_s_eff))


def min_latency_dou(task: TaskSpec, chan: ChannelState, n: float, f_p: float, f_s) -> float:
    """Minimal DoU latency (seconds)."""
    r_s, f_s_eff = _effective_scalars(task, chan, n, f_s)
    return float(min_latency_dou_formula(task.b, task.alpha, chan.r_p, r_s, n, f_p, f_s_eff))


def min_latency_doe(task: TaskSpec, chan: ChannelState, n: float, f_p: float, f_s) -> float:
    """Minimal DoE latency (seconds)."""
    r_s, f_s_eff = _effective_scalars(task, chan, n, f_s)
    return float(
        min_latency_doe_formula(task.b, task.alpha, chan.r_p, chan.big_r, n, f_p, f_s_eff)
    )


def select_scheme(task: TaskSpec, chan: ChannelState, n: float, f_p: float, f_s) -> PartitionDecision:
    """Pick the latency-minimal scheme for one UE at a given allocation.

    Ties (indicator exactly zero) resolve to DoU, matching the ">= 0" branch
    of the rule.
    """
    r_s, f_s_eff = _effective_scalars(task, chan, n, f_s)
    eta, indicator = selection_indicator(task.alpha, chan.r_p, r_s, chan.big_r, n, f_p, f_s_eff)
    if indicator >= 0.0:
        lam = opt_lambda_dou_formula(task.alpha, r_s, n, f_p, f_s_eff)
        x = 1
    else:
        lam = opt_lambda_doe_formula(task.alpha, chan.big_r, f_p, f_s_eff)
        x = 0
    return PartitionDecision(x=x, lam=float(lam), eta=float(eta), indicator=float(indicator))


def scheme_weights(chan: ChannelState, n: float, eta: float, task: TaskSpec | None = None, f_s=None) -> SchemeWeights:
    """Region weights of the two schemes at a given allocation.

    For a multi-secondary channel the effective secondary rate is used, which
    requires `task` and `f_s` to be supplied.
    """
    if not (eta >= 1.0):
        raise ValidationError(f"eta must be >= 1, got {eta!r}")
    if chan.num_secondary == 1:
        r_s = chan.r_s[0]
    else:
        if task is None or f_s is None:
            raise ValidationError("multi-secondary weights need task and f_s for the reduction")
        r_s, _ = _effective_scalars(task, chan, n, f_s)
    x = float(np.clip(n * r_s / chan.big_r, 0.0, 1.0))
    # Trapezoid areas in the (n*r_s/R, r_s/r_p) unit rectangle of width x:
    # s_e is the region below the decision boundary, s_u the rest.
    s_e = x * (2.0 - x) / (2.0 * eta)
    s_u = x - s_e
    w_e = (2.0 - x) / (2.0 * eta)
    return SchemeWeights(w_u=1.0 - w_e, w_e=w_e, s_u=s_u, s_e=s_e)


def estimated_latency(task: TaskSpec, chan: ChannelState, n: float, f_p: float, f_s) -> LatencyReport:
    """Latency summary for one UE: both scheme optima, their min, and the
    region-weighted estimate used by the resource allocator."""
    r_s, f_s_eff = _effective_scalars(task, chan, n, f_s)
    t_u = float(min_latency_dou_formula(task.b, task.alpha, chan.r_p, r_s, n, f_p, f_s_eff))
    t_e = float(min_latency_doe_formula(task.b, task.alpha, chan.r_p, chan.big_r, n, f_p, f_s_eff))
    eta, _ = selection_indicator(task.alpha, chan.r_p, r_s, chan.big_r, n, f_p, f_s_eff)
    w_e = float(scheme_weight_e_formula(n * r_s / chan.big_r, eta))
    t_tilde = (1.0 - w_e) * t_u + w_e * t_e
    return LatencyReport(t_u=t_u, t_e=t_e, t_star=min(t_u, t_e), t_tilde=t_tilde)


def reduce_generic(task: TaskSpec, chan: ChannelState, n: float, f_s) -> GenericReduction:
    """Reduce N sequentially-served secondaries to effective scalars.

    Sub-tasks are forwarded to the secondaries sequentially in index order
    (over the shared uplink for DoU, over the forwarding link for DoE); the
    inner split factors come from requiring all secondaries to finish
    together.  For N == 1 the reduction is exactly the identity.

    Raises ReductionError when an effective-value denominator is
    non-positive, the regime where the reduction is undefined.
    """
    f_s_row = _as_row(f_s)
    n_sec = chan.num_secondary
    if len(f_s_row) != n_sec:
        raise ValidationError(
            f"dimension mismatch: {n_sec} secondary rates vs {len(f_s_row)} CPU shares"
        )
    if n_sec == 1:
        return GenericReduction(
            lambda_s_u=1.0, lambda_s_e=1.0, f_s_eff=f_s_row[0], r_s_eff=chan.r_s[0]
        )

    alpha = task.alpha
    inv_big_r = 1.0 / chan.big_r

    def inner_split(cost_of_link):
        # 1 / (1 + sum_j prod_{k<j}(alpha/f_s_k) / prod_{1<k<=j}(link_k + alpha/f_s_k))
        total = 1.0
        ratio = 1.0
        for j in range(1, n_sec):
            ratio *= (alpha / f_s_row[j - 1]) / (cost_of_link[j] + alpha / f_s_row[j])
            total += ratio
        return 1.0 / total

    uplink_cost = [1.0 / (n * rs) for rs in chan.r_s]
    forward_cost = [inv_big_r] * n_sec
    lam_u = inner_split(uplink_cost)
    lam_e = inner_split(forward_cost)

    denom_f = lam_e * (inv_big_r + alpha / f_s_row[0]) - inv_big_r
    if not (denom_f > 0.0):
        raise ReductionError(
            f"effective secondary capacity undefined: denominator {denom_f!r} <= 0"
        )
    f_s_eff = alpha / denom_f

    denom_r = lam_u * (1.0 / chan.r_s[0] + n * alpha / f_s_row[0]) - n * alpha / f_s_eff
    if not (denom_r > 0.0):
        raise ReductionError(
            f"effective secondary rate undefined: denominator {denom_r!r} <= 0"
        )
    r_s_eff = 1.0 / denom_r

    return GenericReduction(
        lambda_s_u=lam_u, lambda_s_e=lam_e, f_s_eff=f_s_eff, r_s_eff=r_s_eff
    )
