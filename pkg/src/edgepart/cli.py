"""Command-line front end: batch sweeps, single-instance solves, SVG plots.

Numbers are emitted with 9 significant digits and a decimal point regardless
of locale; CSV files use the fixed column order below, end with a newline,
and round-trip through :func:`read_sweep_csv`.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .allocator import SolverConfig, solve
from .channel import (
    SCENARIO_NAMES,
    ScenarioConfig,
    load_mcs_table,
    scenario_preset,
    snr_to_rate,
)
from .harness import SweepSpec, estimate_inflection, run_sweep, SweepPoint
from .model import ChannelState, SystemConfig, TaskSpec, ValidationError, validate_instance

__all__ = [
    "CSV_HEADER",
    "ConfigError",
    "main",
    "read_sweep_csv",
    "parse_rho_grid",
    "parse_instance_config",
    "render_sweep_svg",
]

CSV_HEADER = (
    "rho_mean,t_prop,t_dou,t_doe,gain_dou,gain_doe,"
    "ci_prop,ci_dou,ci_doe,dou_fraction,flagged_trials"
)
_CSV_COLUMNS = CSV_HEADER.split(",")


class ConfigError(ValueError):
    """Raised for malformed CLI inputs: grids, config files, CSV files."""


def _fmt(x: float) -> str:
    return "%.9g" % x


def parse_rho_grid(spec: str) -> tuple[float, ...]:
    """Parse a lo:hi:step grid specification into grid values."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise ConfigError(f"bad grid {spec!r}: expected lo:hi:step")
    try:
        lo, hi, step = (float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"bad grid {spec!r}: values must be numbers") from None
    if step <= 0.0 or hi < lo:
        raise ConfigError(f"empty or descending grid {spec!r}")
    count = int((hi - lo) / step + 1e-9) + 1
    return tuple(round(lo + k * step, 12) for k in range(count))


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

def _scenario_config_lines(scen: ScenarioConfig, grid, trials: int, solver: SolverConfig):
    lines = [
        f"scenario = {scen.name}",
        f"ues = {scen.m_ues}",
        "rho_grid = " + ",".join(_fmt(r) for r in grid),
        f"trials = {trials}",
        f"seed = {scen.seed}",
        f"rho_halfwidth = {_fmt(scen.rho_halfwidth)}",
        f"snr_range_db = {_fmt(scen.snr_range_db[0])},{_fmt(scen.snr_range_db[1])}",
        f"b_range = {_fmt(scen.b_range[0])},{_fmt(scen.b_range[1])}",
        f"alpha_range = {_fmt(scen.alpha_range[0])},{_fmt(scen.alpha_range[1])}",
        f"big_r_range = {_fmt(scen.big_r_range[0])},{_fmt(scen.big_r_range[1])}",
        f"f_p_range = {_fmt(scen.f_p_range[0])},{_fmt(scen.f_p_range[1])}",
        f"f_s_range = {_fmt(scen.f_s_range[0])},{_fmt(scen.f_s_range[1])}",
        "fp_fs_ratio = " + ("none" if scen.fp_fs_ratio is None else _fmt(scen.fp_fs_ratio)),
        f"num_secondary = {scen.num_secondary}",
        f"n_rb = {scen.n_rb}",
        f"rb_bandwidth_hz = {_fmt(scen.rb_bandwidth_hz)}",
        f"solver.tol = {_fmt(solver.tol)}",
        f"solver.max_iters = {solver.max_iters}",
        f"solver.barrier_init = {_fmt(solver.barrier_init)}",
        f"solver.barrier_shrink = {_fmt(solver.barrier_shrink)}",
        f"solver.seed = {solver.seed}",
        f"solver.restarts = {solver.restarts}",
    ]
    return "\n".join(lines) + "\n"


def _write_manifest(path: Path, config_path: Path, csv_path: Path, seed: int) -> None:
    digest = hashlib.sha256(config_path.read_bytes()).hexdigest()
    manifest = {
        "config_digest": digest,
        "seed": seed,
        "tool_version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "outputs": {"csv": str(csv_path), "config": str(config_path)},
    }
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="ascii")


def _sweep_rows(points) -> str:
    rows = [CSV_HEADER]
    for p in points:
        rows.append(",".join([
            _fmt(p.rho_mean), _fmt(p.t_prop), _fmt(p.t_dou), _fmt(p.t_doe),
            _fmt(p.gain_dou), _fmt(p.gain_doe),
            _fmt(p.ci_prop), _fmt(p.ci_dou), _fmt(p.ci_doe),
            _fmt(p.dou_fraction), str(p.flagged_trials),
        ]))
    return "\n".join(rows) + "\n"


def cmd_sweep(args) -> int:
    grid = parse_rho_grid(args.rho_grid)
    overrides = dict(m_ues=args.ues, seed=args.seed, rho_mean=grid[0])
    if args.mcs_table:
        overrides["mcs_table"] = load_mcs_table(args.mcs_table)
    scen = scenario_preset(args.scenario, **overrides)
    solver = SolverConfig(seed=args.seed)
    spec = SweepSpec(scenario=scen, rho_grid=grid, trials=args.trials, solver=solver)
    result = run_sweep(spec)

    csv_path = Path(args.out)
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    config_path = csv_path.with_suffix(csv_path.suffix + ".config")
    manifest_path = csv_path.with_suffix(csv_path.suffix + ".manifest.json")
    config_path.write_text(_scenario_config_lines(scen, grid, args.trials, solver), encoding="ascii")
    csv_path.write_text(_sweep_rows(result.points), encoding="ascii", newline="")
    _write_manifest(manifest_path, config_path, csv_path, args.seed)

    inflection = estimate_inflection(result) if len(result.points) >= 2 else None
    print(f"wrote {len(result.points)} grid points to {csv_path}")
    if inflection is not None and inflection.defined:
        print(f"static-scheme inflection near rho = {_fmt(inflection.rho_star)}")
    return 0


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------

def parse_instance_config(path, mcs_table=None):
    """Read a key = value instance file into a validated Instance.

    System keys: n_rb, f_p_total, f_s_total (comma-separated for several
    secondaries), optional rb_bandwidth_hz.  Per-UE keys use ue.<i>.<field>
    with fields b, alpha, R, optional beta, and either r_p or snr_p plus
    either r_s (comma-separated) or rho.  Errors carry line numbers.
    """
    system: dict[str, str] = {}
    ues: dict[int, dict[str, str]] = {}
    lines_seen: dict[tuple, int] = {}
    with open(path, "r", encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}: line {lineno}: expected 'key = value', got {raw.rstrip()!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if not key or not value:
                raise ConfigError(f"{path}: line {lineno}: empty key or value")
            if key.startswith("ue."):
                parts = key.split(".")
                if len(parts) != 3 or not parts[1].isdigit():
                    raise ConfigError(f"{path}: line {lineno}: bad UE key {key!r}")
                idx = int(parts[1])
                ues.setdefault(idx, {})[parts[2]] = value
                lines_seen[(idx, parts[2])] = lineno
            else:
                system[key] = value
                lines_seen[(key,)] = lineno

    def need(d, key, ctx):
        if key not in d:
            raise ConfigError(f"{path}: missing {ctx}{key}")
        return d[key]

    def fnum(text, ctx):
        try:
            return float(text)
        except ValueError:
            raise ConfigError(f"{path}: {ctx}: not a number: {text!r}") from None

    n_rb = need(system, "n_rb", "")
    try:
        n_rb = int(float(n_rb))
    except ValueError:
        raise ConfigError(f"{path}: n_rb must be an integer, got {n_rb!r}") from None
    f_p_total = fnum(need(system, "f_p_total", ""), "f_p_total")
    f_s_total = tuple(fnum(v, "f_s_total") for v in need(system, "f_s_total", "").split(","))
    rb_bw = fnum(system.get("rb_bandwidth_hz", "180e3"), "rb_bandwidth_hz")
    cfg = SystemConfig(n_rb=n_rb, f_p_total=f_p_total, f_s_total=f_s_total, rb_bandwidth_hz=rb_bw)

    if not ues:
        raise ConfigError(f"{path}: no UEs defined")
    m = max(ues) + 1
    if sorted(ues) != list(range(m)):
        raise ConfigError(f"{path}: UE indices must be contiguous from 0, got {sorted(ues)}")

    table = mcs_table if mcs_table is not None else None
    tasks, channels = [], []
    for i in range(m):
        fields = ues[i]
        ctx = f"ue.{i}."
        b = fnum(need(fields, "b", ctx), ctx + "b")
        alpha = fnum(need(fields, "alpha", ctx), ctx + "alpha")
        beta = fnum(fields["beta"], ctx + "beta") if "beta" in fields else None
        big_r = fnum(need(fields, "R", ctx), ctx + "R")
        if "r_p" in fields:
            r_p = fnum(fields["r_p"], ctx + "r_p")
        elif "snr_p" in fields:
            snr = fnum(fields["snr_p"], ctx + "snr_p")
            r_p = snr_to_rate(snr, rb_bw, table) if table else snr_to_rate(snr, rb_bw)
        else:
            raise ConfigError(f"{path}: missing {ctx}r_p or {ctx}snr_p")
        if "r_s" in fields:
            r_s = tuple(fnum(v, ctx + "r_s") for v in fields["r_s"].split(","))
        elif "rho" in fields:
            rho = fnum(fields["rho"], ctx + "rho")
            r_s = tuple(rho * r_p for _ in range(cfg.num_secondary))
        else:
            raise ConfigError(f"{path}: missing {ctx}r_s or {ctx}rho")
        tasks.append(TaskSpec(b=b, alpha=alpha, beta=beta))
        channels.append(ChannelState(r_p=r_p, r_s=r_s, big_r=big_r))
    return validate_instance(tasks, channels, cfg)


def cmd_solve(args) -> int:
    table = load_mcs_table(args.mcs_table) if args.mcs_table else None
    instance = parse_instance_config(args.config, mcs_table=table)
    result = solve(instance, SolverConfig(seed=args.seed))

    header = (
        f"{'ue':>3} {'n':>5} {'f_p':>12} {'f_s':>14} {'scheme':>6} "
        f"{'lambda':>9} {'eta':>9} {'indicator':>10} {'t_u':>11} {'t_e':>11} {'t_star':>11}"
    )
    print(header)
    alloc = result.allocation
    for i, out in enumerate(result.per_ue):
        d, lat = out.decision, out.latency
        fs_text = ",".join("%.5g" % v for v in alloc.f_s[i])
        print(
            f"{i:>3} {alloc.n[i]:>5.0f} {alloc.f_p[i]:>12.5g} {fs_text:>14} "
            f"{'DoU' if d.x == 1 else 'DoE':>6} {d.lam:>9.6f} {d.eta:>9.5g} "
            f"{d.indicator:>10.5g} {lat.t_u:>11.5g} {lat.t_e:>11.5g} {lat.t_star:>11.5g}"
        )
    mean = sum(t.beta * o.latency.t_star for t, o in zip(instance.tasks, result.per_ue))
    mean /= instance.num_ues
    print(f"weighted mean latency: {_fmt(mean)} s")
    if not result.converged:
        print("warning: solver did not converge within its iteration budget", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------
# plot
# ---------------------------------------------------------------------------

def read_sweep_csv(path) -> list[SweepPoint]:
    """Parse a sweep CSV produced by cmd_sweep back into points."""
    text = Path(path).read_text(encoding="ascii")
    lines = [ln for ln in text.split("\n") if ln]
    if not lines:
        raise ConfigError(f"{path}: empty CSV")
    header = lines[0].split(",")
    missing = [c for c in _CSV_COLUMNS if c not in header]
    if missing:
        raise ConfigError(f"{path}: missing columns: {', '.join(missing)}")
    if len(lines) < 2:
        raise ConfigError(f"{path}: no data rows")
    idx = {c: header.index(c) for c in _CSV_COLUMNS}
    points = []
    for lineno, ln in enumerate(lines[1:], start=2):
        cells = ln.split(",")
        if len(cells) != len(header):
            raise ConfigError(f"{path}: line {lineno}: expected {len(header)} cells")
        try:
            points.append(SweepPoint(
                rho_mean=float(cells[idx["rho_mean"]]),
                t_prop=float(cells[idx["t_prop"]]),
                t_dou=float(cells[idx["t_dou"]]),
                t_doe=float(cells[idx["t_doe"]]),
                gain_dou=float(cells[idx["gain_dou"]]),
                gain_doe=float(cells[idx["gain_doe"]]),
                ci_prop=float(cells[idx["ci_prop"]]),
                ci_dou=float(cells[idx["ci_dou"]]),
                ci_doe=float(cells[idx["ci_doe"]]),
                dou_fraction=float(cells[idx["dou_fraction"]]),
                flagged_trials=int(cells[idx["flagged_trials"]]),
            ))
        except ValueError as exc:
            raise ConfigError(f"{path}: line {lineno}: {exc}") from None
    return points


def render_sweep_svg(points, title="latency gain vs mean channel-quality ratio") -> str:
    """Self-contained SVG 1.1 line chart of the two gain curves.

    Marks the static-scheme inflection with a dashed vertical line when the
    sweep contains one.
    """
    if not points:
        raise ConfigError("cannot plot an empty sweep")
    width, height = 720, 480
    ml, mr, mt, mb = 80, 24, 36, 56
    pw, ph = width - ml - mr, height - mt - mb

    xs = [p.rho_mean for p in points]
    ys = [p.gain_dou for p in points] + [p.gain_doe for p in points] + [0.0]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    pad = 0.08 * (y_hi - y_lo or 1.0)
    y_lo, y_hi = y_lo - pad, y_hi + pad
    x_span = x_hi - x_lo or 1.0

    def px(x):
        return ml + pw * (x - x_lo) / x_span

    def py(y):
        return mt + ph * (1.0 - (y - y_lo) / (y_hi - y_lo))

    def polyline(series, color, cls):
        pts = " ".join(f"{px(p.rho_mean):.2f},{py(getattr(p, series)):.2f}" for p in points)
        return (
            f'<polyline class="{cls}" fill="none" stroke="{color}" '
            f'stroke-width="2" points="{pts}"/>'
        )

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.0f}" y="20" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{title}</text>',
        # axes
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + ph}" stroke="black"/>',
        f'<line x1="{ml}" y1="{mt + ph}" x2="{ml + pw}" y2="{mt + ph}" stroke="black"/>',
    ]
    if y_lo < 0.0 < y_hi:
        parts.append(
            f'<line x1="{ml}" y1="{py(0):.2f}" x2="{ml + pw}" y2="{py(0):.2f}" '
            f'stroke="#bbbbbb" stroke-dasharray="3,3"/>'
        )
    for k in range(len(xs)):
        x = px(xs[k])
        parts.append(f'<line x1="{x:.2f}" y1="{mt + ph}" x2="{x:.2f}" y2="{mt + ph + 5}" stroke="black"/>')
        parts.append(
            f'<text x="{x:.2f}" y="{mt + ph + 20}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{_fmt(xs[k])}</text>'
        )
    for k in range(6):
        y_val = y_lo + k * (y_hi - y_lo) / 5
        y = py(y_val)
        parts.append(f'<line x1="{ml - 5}" y1="{y:.2f}" x2="{ml}" y2="{y:.2f}" stroke="black"/>')
        parts.append(
            f'<text x="{ml - 9}" y="{y + 4:.2f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{y_val * 100:.1f}%</text>'
        )
    parts.append(
        f'<text x="{ml + pw / 2:.0f}" y="{height - 12}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">mean secondary-to-primary rate ratio</text>'
    )
    parts.append(
        f'<text x="18" y="{mt + ph / 2:.0f}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="12" transform="rotate(-90 18 {mt + ph / 2:.0f})">latency gain vs static scheme</text>'
    )
    parts.append(polyline("gain_dou", "#1f77b4", "gain-dou"))
    parts.append(polyline("gain_doe", "#ff7f0e", "gain-doe"))
    # legend
    parts.append(f'<line x1="{ml + 12}" y1="{mt + 14}" x2="{ml + 40}" y2="{mt + 14}" stroke="#1f77b4" stroke-width="2"/>')
    parts.append(f'<text x="{ml + 46}" y="{mt + 18}" font-family="sans-serif" font-size="12">gain vs all-DoU</text>')
    parts.append(f'<line x1="{ml + 12}" y1="{mt + 32}" x2="{ml + 40}" y2="{mt + 32}" stroke="#ff7f0e" stroke-width="2"/>')
    parts.append(f'<text x="{ml + 46}" y="{mt + 36}" font-family="sans-serif" font-size="12">gain vs all-DoE</text>')

    if len(points) >= 2:
        inflection = estimate_inflection(list(points))
        if inflection.defined:
            x = px(inflection.rho_star)
            parts.append(
                f'<line class="inflection" x1="{x:.2f}" y1="{mt}" x2="{x:.2f}" '
                f'y2="{mt + ph}" stroke="#2ca02c" stroke-dasharray="6,4"/>'
            )
            parts.append(
                f'<circle class="inflection-marker" cx="{x:.2f}" cy="{py(0):.2f}" '
                f'r="4" fill="#2ca02c"/>'
            )
            parts.append(
                f'<text x="{x + 6:.2f}" y="{mt + 14}" font-family="sans-serif" '
                f'font-size="11" fill="#2ca02c">inflection {_fmt(inflection.rho_star)}</text>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cmd_plot(args) -> int:
    points = read_sweep_csv(args.csv)
    svg = render_sweep_svg(points)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(svg, encoding="ascii")
    print(f"wrote {out}")
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="edgepart",
        description="Adaptive task-partitioning offloading: sweeps, solves, plots.",
    )
    parser.add_argument("--version", action="version", version=f"edgepart {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="Monte Carlo sweep over mean channel-quality ratios")
    sweep.add_argument("--scenario", required=True, choices=SCENARIO_NAMES)
    sweep.add_argument("--ues", type=int, required=True, help="number of UEs")
    sweep.add_argument("--rho-grid", required=True, help="grid as lo:hi:step, e.g. 0.1:1.0:0.1")
    sweep.add_argument("--trials", type=int, required=True, help="Monte Carlo trials per grid point")
    sweep.add_argument("--seed", type=int, default=0)
    sweep.add_argument("--out", required=True, help="output CSV path")
    sweep.add_argument("--mcs-table", default=None, help="optional MCS table override file")
    sweep.set_defaults(func=cmd_sweep)

    solve_p = sub.add_parser("solve", help="solve one instance from a config file")
    solve_p.add_argument("--config", required=True, help="instance file (key = value lines)")
    solve_p.add_argument("--seed", type=int, default=0)
    solve_p.add_argument("--mcs-table", default=None, help="optional MCS table override file")
    solve_p.set_defaults(func=cmd_solve)

    plot = sub.add_parser("plot", help="render a sweep CSV as an SVG chart")
    plot.add_argument("--csv", required=True, help="input CSV from the sweep command")
    plot.add_argument("--out", required=True, help="output SVG path")
    plot.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
