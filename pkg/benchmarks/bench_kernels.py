"""Compare the numba and numpy paths of the hot kernels.

Usage: python3 benchmarks/bench_kernels.py [--repeat N] [--size N]

Both backends are fed identical inputs; the script checks they agree and
prints the best-of-N wall time for each.
"""
import argparse
import time

import numpy as np

from cylstable import kernels


def best_of(fn, repeat):
    fn()  # warm-up (includes JIT compilation for numba)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(size, rng):
    v = rng.uniform(-0.5 * np.pi, 0.5 * np.pi, size)
    w = rng.standard_exponential(size)
    x = rng.standard_normal((size, 8))
    weights = rng.uniform(0, 1, 8)
    S, M = max(size // 1024, 1), 256
    coeffs = rng.standard_normal((S, M, 3, 3))
    dz = rng.standard_normal((S, M, 3))
    path = rng.standard_normal((S, M + 1, 3))
    return {
        "sas_cms": lambda b: kernels.sas_cms(1.5, v, w, backend=b),
        "positive_cms": lambda b: kernels.positive_cms(0.75, v, w, backend=b),
        "sphere_power": lambda b: kernels.sphere_power(x, weights, 1.5, backend=b),
        "step_integral_path": lambda b: kernels.step_integral_path(coeffs, dz, backend=b),
        "apply_sum": lambda b: kernels.apply_sum(coeffs, dz, backend=b),
        "sup_norm": lambda b: kernels.sup_norm(path, backend=b),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--size", type=int, default=1_000_000)
    args = ap.parse_args()
    if not kernels.HAVE_NUMBA:
        print("numba unavailable (or disabled via CYLSTABLE_DISABLE_NUMBA); numpy timings only")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<20}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}")
    for name, fn in cases(args.size, rng).items():
        t_np = best_of(lambda: fn("numpy"), args.repeat)
        if kernels.HAVE_NUMBA:
            np.testing.assert_allclose(fn("numba"), fn("numpy"), rtol=1e-10, atol=1e-12)
            t_nb = best_of(lambda: fn("numba"), args.repeat)
            print(f"{name:<20}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>10.1f}")
        else:
            print(f"{name:<20}{t_np:>12.4f}{'-':>12}{'-':>10}")


if __name__ == "__main__":
    main()
