#!/usr/bin/env python3
"""Time one simulated day of truth propagation: numba kernel vs numpy fallback.

    python3 benchmarks/bench_propagate.py --sats 20 105 --repeats 3
"""

import argparse
import json
import sys
import time

import numpy as np

from dragphase import kernels
from dragphase.config import Environment, SatelliteParams
from dragphase.dynamics import circular_cluster


def make_args(n_sats, env, sat, steps):
    atm = env.atmosphere
    rng = np.random.default_rng(0)
    states = circular_cluster(n_sats, 475.0, env).states.copy()
    areas = rng.uniform(sat.area_min, sat.area_max, n_sats)
    return (
        states, sat.ballistic(areas), steps, 10.0, env.mu_earth, env.atmosphere_rate,
        env.r_earth, atm.altitude, atm.log_rho, atm.log_slope,
        env.r_earth + atm.h_min, env.r_earth + atm.h_max,
    )


def best_of(func, args, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        out, _ = func(*args)
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sats", type=int, nargs="+", default=[1, 20, 105])
    ap.add_argument("--steps", type=int, default=8640, help="fine steps (8640 = one day at 10 s)")
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--json", action="store_true", help="print JSON instead of a table")
    args = ap.parse_args(argv)

    env, sat = Environment(), SatelliteParams()
    rows = []
    for n in args.sats:
        call = make_args(n, env, sat, args.steps)
        t_np, out_np = best_of(kernels.propagate_numpy, call, args.repeats)
        row = {"n_sats": n, "numpy_s": t_np}
        if kernels.NUMBA_AVAILABLE:
            kernels.propagate_numba(*make_args(n, env, sat, 1))  # compile outside the timing
            t_nb, out_nb = best_of(kernels.propagate_numba, call, args.repeats)
            row.update(
                numba_s=t_nb,
                speedup=t_np / t_nb,
                max_rel_diff=float(np.max(np.abs(out_nb - out_np) / np.maximum(np.abs(out_np), 1e-300))),
            )
        rows.append(row)

    if args.json:
        json.dump(rows, sys.stdout, indent=2)
        print()
        return 0
    print(f"{'sats':>5} {'numpy [s]':>10} {'numba [s]':>10} {'speedup':>8} {'max rel diff':>13}")
    for r in rows:
        print(
            f"{r['n_sats']:>5} {r['numpy_s']:>10.4f} {r.get('numba_s', float('nan')):>10.4f} "
            f"{r.get('speedup', float('nan')):>8.1f} {r.get('max_rel_diff', float('nan')):>13.2e}"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
