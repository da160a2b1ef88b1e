"""numba vs numpy timings for the hot kernels.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Both backends live side by side in btwist.kernels, so one process times both.
Each numba kernel is called once before timing to keep compilation out of it.
"""
import argparse
import time

import numpy as np

from btwist import kernels
from btwist.billiard import random_trajectory_start, simulate
from btwist.genfunc import hc_jet
from btwist.profile import RadiusProfile

P2 = RadiusProfile(1.0, ((0.0005, 0.0),))


def best_of(fn, repeat):
    fn()  # warm-up (jit compile, caches)
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def jet_grid(backend, n=1_000_000):
    rng = np.random.default_rng(0)
    t0 = rng.uniform(0, 1, n)
    t1 = t0 + rng.uniform(1, 12, n)
    return lambda: hc_jet(P2, 0.01, t0, t1, backend=backend)


def trajectories(backend, count=20, bounces=200):
    starts = [random_trajectory_start(P2, 0.01, np.random.default_rng(i)) for i in range(count)]
    return lambda: [simulate(P2, s, bounces, backend=backend) for s in starts]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if kernels.NUMBA is None:
        raise SystemExit("numba is not importable; nothing to compare")
    cases = [("h_c jets, 1e6 points", jet_grid), ("20 trajectories x 200 bounces", trajectories)]
    print(f"{'case':<32}{'numpy [s]':>12}{'numba [s]':>12}{'speed-up':>10}")
    for label, make in cases:
        t_np = best_of(make(kernels.NUMPY), args.repeat)
        t_nb = best_of(make(kernels.NUMBA), args.repeat)
        print(f"{label:<32}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>10.1f}")


if __name__ == "__main__":
    main()
