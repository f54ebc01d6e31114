"""Compare the compiled and pure-Python collision kernels on the L-shaped table.

    python benchmarks/bench_kernel.py [--trajectories N] [--bounces M]

Both kernels trace the same starts; the script checks that their summaries
are bit-identical and reports events per second for each.
"""
import argparse
import time

import numpy as np

from discbilliard import _layout as L
from discbilliard import kernel
from discbilliard.dynamics import EPS_GRAZE, MAX_GRAZING, _eps, ensemble_starts
from discbilliard.geometry import validate_polygon
from discbilliard.table import build_equivalent_table

L_VERTS = [(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)]


def time_backend(mod, table, starts, bounces, repeats):
    eps_joint, eps_time = _eps(table)
    out = np.zeros((len(starts), L.NSUM))
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        mod.run_batch(table.packed, starts, bounces, float("inf"), eps_joint, eps_time,
                      EPS_GRAZE, MAX_GRAZING, out)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trajectories", type=int, default=20)
    ap.add_argument("--bounces", type=int, default=5000)
    ap.add_argument("--radius", type=float, default=0.2)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    table = build_equivalent_table(validate_polygon(L_VERTS), args.radius)
    starts = ensemble_starts(table, args.trajectories, seed=0)
    events = args.trajectories * args.bounces
    results = {}
    for name, mod in sorted(kernel.backends().items()):
        # the Python kernel is slow; one pass is enough for a stable figure
        reps = args.repeats if name != "python" else 1
        dt, out = time_backend(mod, table, starts, args.bounces, reps)
        results[name] = (dt, out)
        print(f"{name:>7}: {dt:8.3f} s  {events / dt:12.0f} events/s")
    if len(results) == 2:
        (t_c, o_c), (t_p, o_p) = results["cython"], results["python"]
        print(f"speedup: {t_p / t_c:.1f}x, identical summaries: {np.array_equal(o_c, o_p)}")
    print(f"default backend: {kernel.BACKEND}")


if __name__ == "__main__":
    main()
