"""Time the compiled and pure-Python kernels on the same workloads.

    python benchmarks/bench_kernels.py [--repeat N]

Prints one line per (kernel, backend) with the best wall time of N repeats
and the speedup of the compiled backend.
"""

import argparse
import time

import numpy as np

from alphys import _backend
from alphys.ctqmc import LatticeSpec, WorldlineConfiguration, sw_sweep
from alphys.ctqmc.observables import measure


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def smo_workload(kernels):
    rng = np.random.default_rng(0)
    X = rng.uniform(0, 1, size=(300, 2))
    y = np.where(X[:, 1] > 0.5 * np.sin(3 * X[:, 0]) + 0.3, 1.0, -1.0)
    flip = rng.random(300) < 0.05
    y[flip] = -y[flip]
    gamma = 1.0 / (2.0 * float(np.mean(np.var(X, axis=0))))
    return lambda: kernels.smo_solve(X, y, 1.0, gamma, 1e-3, 100_000)


def sweep_workload(kernels, L=6, sweeps=50):
    spec = LatticeSpec.triangular(L, 1.0, 0.8, 1.0)

    def run():
        rng = np.random.default_rng(0)
        cfg = WorldlineConfiguration.random(spec.n_sites, spec.beta, rng)
        for _ in range(sweeps):
            cfg, _ = sw_sweep(cfg, spec, rng, kernels=kernels)
            measure(cfg, spec, kernels)

    return run


WORKLOADS = {
    "smo_solve (300 points)": smo_workload,
    "sweep + measure (L=6, 50 sweeps)": sweep_workload,
}


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    backends = _backend.available()
    if "cython" not in backends:
        print("compiled extension not built; timing the Python backend only")
    for name, make in WORKLOADS.items():
        timings = {b: _best(make(k), args.repeat) for b, k in backends.items()}
        for b, t in timings.items():
            print(f"{name:34s} {b:7s} {t * 1e3:10.2f} ms")
        if len(timings) == 2:
            print(f"{name:34s} speedup {timings['python'] / timings['cython']:9.1f}x")


if __name__ == "__main__":
    main()
