"""Time the numba and numpy delay-histogram and dead-time kernels.

Usage: python3 benchmarks/bench_kernels.py [--duration S] [--repeat N]
"""

import argparse
import time

import numpy as np

from spdckit import kernels
from spdckit.pair_statistics import DetectionConfig, simulate_timestamp_streams


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--duration", type=float, default=60.0, help="simulated acquisition, s")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--window", type=int, default=10_000, help="half window, ps")
    args = ap.parse_args()

    s, i = simulate_timestamp_streams(DetectionConfig(duration=args.duration, rng_seed=0))
    half = args.window // 100
    print(f"streams: {len(s)} signal, {len(i)} idler events; tau 100 ps, window +/-{args.window} ps")

    rows = []
    t_np, ref = best_of(lambda: kernels.delay_histogram_numpy(s.times, i.times, 100, half), args.repeat)
    rows.append(("delay_histogram", "numpy", t_np))
    if kernels.HAVE_NUMBA:
        kernels.delay_histogram_numba(s.times[:10], i.times[:10], 100, half)  # compile
        t_nb, out = best_of(lambda: kernels.delay_histogram_numba(s.times, i.times, 100, half), args.repeat)
        assert np.array_equal(out, ref)
        rows.append(("delay_histogram", "numba", t_nb))

    dead = 50_000
    t_np, ref = best_of(lambda: kernels.nonparalyzable_dead_time_numpy(s.times, dead), args.repeat)
    rows.append(("dead_time", "numpy", t_np))
    if kernels.HAVE_NUMBA:
        kernels.nonparalyzable_dead_time_numba(s.times[:10], dead)
        t_nb, out = best_of(lambda: kernels.nonparalyzable_dead_time_numba(s.times, dead), args.repeat)
        assert np.array_equal(out, ref)
        rows.append(("dead_time", "numba", t_nb))

    print(f"{'kernel':18s}{'backend':10s}{'best s':>10s}")
    for k, b, t in rows:
        print(f"{k:18s}{b:10s}{t:10.4f}")
    if not kernels.HAVE_NUMBA:
        print("numba not installed; numpy timings only")


if __name__ == "__main__":
    main()
