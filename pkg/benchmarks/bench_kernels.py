"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py [--repeat 3]

Times the spectral-projection kernel at several PMP counts / spectral ranks,
the extremum counter, and one end-to-end simulation per backend, and checks
that both backends agree.
"""

from __future__ import annotations

import argparse
import time
from dataclasses import replace

import numpy as np

from mcfxt import kernels
from mcfxt.simulator import SimConfig, simulate_series
from mcfxt.spectra import build_ook_spectrum


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_projection(repeat):
    rng = np.random.default_rng(0)
    rows = []
    for n, r, t in [(159, 1, 20000), (159, 20, 20000), (159, 159, 5000), (32, 4, 50000)]:
        proj = rng.normal(size=(n, r)) + 1j * rng.normal(size=(n, r))
        phases = np.cumsum(0.01 * rng.normal(size=(t, n)), axis=0)
        results = {}
        for name in kernels.available_backends():
            be = kernels.get_backend(name)
            results[name] = be.projected_power(phases, proj)
            results[name + "_s"] = best_of(lambda: be.projected_power(phases, proj), repeat)
        rows.append((f"projected_power N={n} R={r} T={t}", results))
    return rows


def bench_extrema(repeat):
    x = np.cumsum(np.random.default_rng(1).normal(size=1_000_000)) * 0.05
    results = {}
    for name in kernels.available_backends():
        be = kernels.get_backend(name)
        results[name] = be.count_extrema(x, 0.5)
        results[name + "_s"] = best_of(lambda: be.count_extrema(x, 0.5), repeat)
    return [("count_extrema n=1e6", results)]


def bench_simulation(repeat):
    cfg = replace(SimConfig(duration=120.0), source=build_ook_spectrum(25e9, 15))
    results = {}
    for name in kernels.available_backends():
        with kernels.use_backend(name):
            results[name] = simulate_series(cfg).xt_db
            results[name + "_s"] = best_of(lambda: simulate_series(cfg), repeat)
    return [("simulate_series OOK 120 s (4800 samples)", results)]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    names = list(kernels.available_backends())
    print(f"default backend: {kernels.BACKEND}; available: {', '.join(names)}")
    if "cython" not in names:
        print("compiled extension not built; only the Python backend is timed")
    header = f"{'case':44s}" + "".join(f"{n + ' [s]':>14s}" for n in names) + f"{'speedup':>10s}{'max rel diff':>14s}"
    print(header)
    for label, res in bench_projection(args.repeat) + bench_extrema(args.repeat) + bench_simulation(args.repeat):
        line = f"{label:44s}" + "".join(f"{res[n + '_s']:14.4f}" for n in names)
        if len(names) == 2:
            speedup = res["python_s"] / res["cython_s"]
            a, b = np.asarray(res["python"], float), np.asarray(res["cython"], float)
            diff = float(np.max(np.abs(a - b) / np.maximum(np.abs(a), 1e-300)))
            line += f"{speedup:10.2f}{diff:14.2e}"
        print(line)


if __name__ == "__main__":
    main()
