#!/usr/bin/env python3
"""Benchmark the compiled allocation kernels against the pure-Python twins.

Times the objective / gradient evaluations and the full allocation pipeline
at several UE counts, then a small end-to-end Monte Carlo batch.  Run after
building the extension:

    python benchmarks/bench_backends.py
"""

import time

import numpy as np

from edgepart._backend import pure

try:
    from edgepart._backend import _solver_core as compiled
except ImportError:
    compiled = None


def make_point(m, seed):
    rng = np.random.default_rng(seed)
    b = rng.uniform(0.8e6, 1.2e6, m)
    alpha = np.full(m, 248.0)
    beta = np.full(m, 1.0 / m)
    r_p = rng.uniform(3e4, 1e6, m)
    r_s = r_p * rng.uniform(0.2, 1.0, m)
    big_r = np.full(m, 1e9)
    n = rng.uniform(2.0, 30.0, m)
    f_p = rng.uniform(1e9, 3e9, m)
    f_s = rng.uniform(1e9, 3e9, m)
    return (b, alpha, beta, r_p, r_s, big_r), (n, f_p, f_s)


def timeit(fn, reps):
    t0 = time.perf_counter()
    for _ in range(reps):
        fn()
    return (time.perf_counter() - t0) / reps


def bench(label, fn_pure, fn_compiled, reps):
    t_pure = timeit(fn_pure, reps)
    if fn_compiled is None:
        print(f"{label:<30} pure {t_pure * 1e6:>10.1f} us   compiled       n/a")
        return
    t_comp = timeit(fn_compiled, reps)
    print(f"{label:<30} pure {t_pure * 1e6:>10.1f} us   compiled "
          f"{t_comp * 1e6:>8.1f} us   speedup {t_pure / t_comp:>6.1f}x")


def main():
    print(f"compiled backend available: {compiled is not None}")
    solver_args = (1e-6, 500, 1.0, 0.2, 0, 3, True)
    for m in (2, 8, 32):
        params, point = make_point(m, seed=m)
        full = params + point + (0,)
        budgets = (100.0 if m <= 25 else 4.0 * m, 2.5e10, 2.5e10)
        bench(
            f"objective eval (M={m})",
            lambda: pure.eval_objective(*full),
            (lambda: compiled.eval_objective(*full)) if compiled else None,
            reps=2000,
        )
        bench(
            f"gradient eval (M={m})",
            lambda: pure.eval_gradient(*full),
            (lambda: compiled.eval_gradient(*full)) if compiled else None,
            reps=2000,
        )
        solve_args = params + budgets + (0,) + solver_args
        bench(
            f"full solve (M={m})",
            lambda: pure.solve_allocation(*solve_args),
            (lambda: compiled.solve_allocation(*solve_args)) if compiled else None,
            reps=3,
        )

    # end-to-end batch: 20 paired trials of the headline scenario
    from edgepart.allocator import SolverConfig
    from edgepart.channel import scenario_preset
    from edgepart.harness import run_trial

    scen = scenario_preset("high_forwarding", m_ues=8, rho_mean=0.5, seed=1)
    cfg = SolverConfig(seed=0)
    t0 = time.perf_counter()
    for k in range(20):
        run_trial(scen, k, cfg)
    per_trial = (time.perf_counter() - t0) / 20
    print(f"\nactive-backend trial (M=8, 3 policies): {per_trial * 1e3:.2f} ms "
          f"-> {per_trial * 20_000 / 60:.1f} min per 20k-trial sweep per worker")


if __name__ == "__main__":
    main()
