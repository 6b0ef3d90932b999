"""Random system-parameter generation: SNR draws, rate mapping, scenarios.

The SNR-to-rate map is a 15-entry CQI-style table (QPSK/16QAM/64QAM with
code rates 78/1024 .. 948/1024) giving a monotone step function from SNR to
per-RB spectral efficiency; the block-error target is absorbed into the SNR
thresholds.  The table can be replaced via a plain-text file, one
``min_snr_db spectral_eff`` pair per line, sorted ascending.

Random draws are counter-based: every (seed, trial_index) pair maps to its
own Philox counter block, so trials are independent streams with no
sequential state and can be generated in parallel in any order.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace

import numpy as np

from .model import ChannelState, SystemConfig, TaskSpec, ValidationError

__all__ = [
    "McsEntry",
    "DEFAULT_MCS_TABLE",
    "ScenarioConfig",
    "SCENARIO_NAMES",
    "load_mcs_table",
    "snr_to_rate",
    "scenario_preset",
    "sample_trial",
]

# Smallest admissible secondary-to-primary rate ratio: keeps sampled
# secondary rates strictly positive when a sweep requests a tiny mean ratio.
RHO_EPSILON = 1e-3

_PHILOX_KEY_CONST = 0xDA3E39CB94B95BDB
_UINT64_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class McsEntry:
    """One modulation-and-coding option: active from min_snr_db upward."""

    min_snr_db: float
    modulation: str
    code_rate: float
    spectral_eff: float

    def __post_init__(self):
        if not (0.0 < self.code_rate < 1.0):
            raise ValidationError(f"code_rate must lie in (0, 1), got {self.code_rate!r}")
        if not (self.spectral_eff > 0.0):
            raise ValidationError(f"spectral_eff must be positive, got {self.spectral_eff!r}")


DEFAULT_MCS_TABLE: tuple[McsEntry, ...] = (
    McsEntry(-6.7, "QPSK", 78 / 1024, 0.1523),
    McsEntry(-4.7, "QPSK", 120 / 1024, 0.2344),
    McsEntry(-2.3, "QPSK", 193 / 1024, 0.3770),
    McsEntry(0.2, "QPSK", 308 / 1024, 0.6016),
    McsEntry(2.4, "QPSK", 449 / 1024, 0.8770),
    McsEntry(4.3, "QPSK", 602 / 1024, 1.1758),
    McsEntry(5.9, "16QAM", 378 / 1024, 1.4766),
    McsEntry(8.1, "16QAM", 490 / 1024, 1.9141),
    McsEntry(10.3, "16QAM", 616 / 1024, 2.4063),
    McsEntry(11.7, "64QAM", 466 / 1024, 2.7305),
    McsEntry(14.1, "64QAM", 567 / 1024, 3.3223),
    McsEntry(16.3, "64QAM", 666 / 1024, 3.9023),
    McsEntry(18.7, "64QAM", 772 / 1024, 4.5234),
    McsEntry(21.0, "64QAM", 873 / 1024, 5.1152),
    McsEntry(22.7, "64QAM", 948 / 1024, 5.5547),
)


def _check_table(table) -> tuple[McsEntry, ...]:
    table = tuple(table)
    if not table:
        raise ValidationError("MCS table must not be empty")
    for prev, cur in zip(table, table[1:]):
        if not (cur.min_snr_db > prev.min_snr_db):
            raise ValidationError("MCS table thresholds must be strictly increasing")
        if not (cur.spectral_eff > prev.spectral_eff):
            raise ValidationError("MCS table efficiencies must be strictly increasing")
    return table


def load_mcs_table(path) -> tuple[McsEntry, ...]:
    """Read an MCS override file: ``min_snr_db spectral_eff`` per line.

    Blank lines and lines starting with '#' are skipped.  Entries must be
    sorted ascending in both columns.
    """
    entries = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValidationError(
                    f"{path}: line {lineno}: expected 'min_snr_db spectral_eff', got {raw!r}"
                )
            try:
                snr, eff = float(parts[0]), float(parts[1])
            except ValueError as exc:
                raise ValidationError(f"{path}: line {lineno}: {exc}") from None
            entries.append(McsEntry(snr, "custom", 0.5, eff))
    return _check_table(entries)


def snr_to_rate(snr_db, rb_bandwidth_hz: float, table=DEFAULT_MCS_TABLE):
    """Per-RB rate in bits/s for the highest MCS whose threshold is met.

    SNR below every threshold falls back to the lowest entry.  Accepts a
    scalar or an array of SNRs.
    """
    table = _check_table(table)
    thresholds = np.array([e.min_snr_db for e in table])
    effs = np.array([e.spectral_eff for e in table])
    idx = np.clip(np.searchsorted(thresholds, snr_db, side="right") - 1, 0, len(table) - 1)
    rate = rb_bandwidth_hz * effs[idx]
    return float(rate) if np.isscalar(snr_db) else rate


@dataclass(frozen=True)
class ScenarioConfig:
    """Distributional description of one simulated scenario.

    Per trial, each UE draws its primary-link SNR uniformly from snr_range_db
    and gets r_p through the MCS table; the secondary rate is r_s = rho * r_p
    with rho drawn uniformly from [max(RHO_EPSILON, rho_mean - rho_halfwidth),
    min(1, rho_mean + rho_halfwidth)], so the mean link-quality ratio is swept
    directly.  b, alpha and the forwarding rate are per-UE uniform draws;
    capacities are per-trial draws.  When fp_fs_ratio is set, the primary
    capacity is that multiple of the drawn secondary capacity instead of an
    independent draw.
    """

    name: str
    m_ues: int
    rho_mean: float
    rho_halfwidth: float = 0.05
    snr_range_db: tuple[float, float] = (0.0, 30.0)
    b_range: tuple[float, float] = (0.8e6, 1.2e6)
    alpha_range: tuple[float, float] = (248.0, 248.0)
    big_r_range: tuple[float, float] = (50e6, 100e6)
    f_p_range: tuple[float, float] = (2e10, 3e10)
    f_s_range: tuple[float, float] = (2e10, 3e10)
    fp_fs_ratio: float | None = None
    num_secondary: int = 1
    n_rb: int = 100
    rb_bandwidth_hz: float = 180e3
    seed: int = 0
    mcs_table: tuple[McsEntry, ...] = DEFAULT_MCS_TABLE

    def __post_init__(self):
        if self.m_ues < 1:
            raise ValidationError(f"m_ues must be >= 1, got {self.m_ues!r}")
        if not (0.0 < self.rho_mean <= 1.0):
            raise ValidationError(f"rho_mean must lie in (0, 1], got {self.rho_mean!r}")
        if self.rho_halfwidth < 0.0:
            raise ValidationError("rho_halfwidth must be >= 0")
        for fname in ("b_range", "alpha_range", "big_r_range", "f_p_range", "f_s_range"):
            lo, hi = getattr(self, fname)
            if not (0.0 < lo <= hi):
                raise ValidationError(f"{fname} must be positive and ordered, got ({lo!r}, {hi!r})")
        if self.fp_fs_ratio is not None and not (self.fp_fs_ratio > 0.0):
            raise ValidationError("fp_fs_ratio must be positive when set")
        if self.num_secondary < 1:
            raise ValidationError("num_secondary must be >= 1")
        _check_table(self.mcs_table)


SCENARIO_NAMES = (
    "high_forwarding",
    "limited_primary",
    "comm_dominated",
    "comp_dominated",
    "custom",
)


def scenario_preset(name: str, **overrides) -> ScenarioConfig:
    """Build a named scenario on top of the default simulation parameters.

    high_forwarding pins the forwarding link at 1 Gbps; limited_primary draws
    the secondary capacity and sets the primary to 0.2 of it; comm_dominated
    drops the computation intensity to 45 cycles/bit; comp_dominated draws
    both capacities from [6, 10] GHz-cycles/s; custom keeps the defaults
    verbatim.  Keyword overrides (m_ues, rho_mean, seed, ...) are applied on
    top of the preset.
    """
    base = dict(name=name, m_ues=8, rho_mean=0.5)
    if name == "high_forwarding":
        base["big_r_range"] = (1e9, 1e9)
    elif name == "limited_primary":
        base["fp_fs_ratio"] = 0.2
    elif name == "comm_dominated":
        base["alpha_range"] = (45.0, 45.0)
    elif name == "comp_dominated":
        base["f_p_range"] = (6e9, 10e9)
        base["f_s_range"] = (6e9, 10e9)
    elif name != "custom":
        raise ValidationError(f"unknown scenario {name!r}; known: {', '.join(SCENARIO_NAMES)}")
    cfg = ScenarioConfig(**base)
    return replace(cfg, **overrides) if overrides else cfg


def _trial_rng(seed: int, trial_index: int, stream: int = 0) -> np.random.Generator:
    """Independent generator for one trial, derived from a counter block."""
    key = np.array([seed & _UINT64_MASK, _PHILOX_KEY_CONST], dtype=np.uint64)
    counter = np.array([0, 0, trial_index & _UINT64_MASK, stream & _UINT64_MASK], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(counter=counter, key=key))


def sample_trial(scfg: ScenarioConfig, trial_index: int):
    """Draw one system instance; a pure function of (scfg.seed, trial_index).

    Returns (tasks, channels, system_config) ready for validate_instance.
    Priority weights are left unset (uniform by default downstream).
    """
    rng = _trial_rng(scfg.seed, trial_index)
    m = scfg.m_ues

    snr = rng.uniform(scfg.snr_range_db[0], scfg.snr_range_db[1], size=m)
    rho_lo = max(RHO_EPSILON, scfg.rho_mean - scfg.rho_halfwidth)
    rho_hi = min(1.0, scfg.rho_mean + scfg.rho_halfwidth)
    rho = rng.uniform(rho_lo, rho_hi, size=m)
    b = rng.uniform(scfg.b_range[0], scfg.b_range[1], size=m)
    alpha = rng.uniform(scfg.alpha_range[0], scfg.alpha_range[1], size=m)
    big_r = rng.uniform(scfg.big_r_range[0], scfg.big_r_range[1], size=m)
    f_s_total = rng.uniform(scfg.f_s_range[0], scfg.f_s_range[1], size=scfg.num_secondary)
    if scfg.fp_fs_ratio is not None:
        f_p_total = scfg.fp_fs_ratio * float(f_s_total[0])
    else:
        f_p_total = float(rng.uniform(scfg.f_p_range[0], scfg.f_p_range[1]))

    r_p = snr_to_rate(snr, scfg.rb_bandwidth_hz, scfg.mcs_table)
    tasks = [TaskSpec(b=float(b[i]), alpha=float(alpha[i])) for i in range(m)]
    channels = [
        ChannelState(
            r_p=float(r_p[i]),
            r_s=tuple(float(rho[i] * r_p[i]) for _ in range(scfg.num_secondary)),
            big_r=float(big_r[i]),
        )
        for i in range(m)
    ]
    cfg = SystemConfig(
        n_rb=scfg.n_rb,
        f_p_total=f_p_total,
        f_s_total=tuple(float(v) for v in f_s_total),
        rb_bandwidth_hz=scfg.rb_bandwidth_hz,
    )
    return tasks, channels, cfg
