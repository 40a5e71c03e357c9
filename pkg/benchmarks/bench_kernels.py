"""Time the numba and numpy kernel backends on identical inputs.

    python benchmarks/bench_kernels.py [--repeat 5]

Compilation happens in a warm-up call and is reported separately.
"""

import argparse
import time

import numpy as np

from holofix.kernels import numba_backend, numpy_backend


def cases(rng):
    T, n = 200, 3
    exps = rng.integers(0, 6, size=(T, n)).astype(np.int64)
    coeffs = rng.normal(size=T) + 1j * rng.normal(size=T)
    comp = rng.integers(0, n, size=T).astype(np.int64)
    Z = rng.normal(size=(5000, n)) + 1j * rng.normal(size=(5000, n))
    roots = np.exp(2j * np.pi * np.arange(40) / 40) * np.linspace(0.5, 2, 40)
    c = np.polynomial.polynomial.polyfromroots(roots).astype(np.complex128)
    z0 = 3 * np.exp(2j * np.pi * (np.arange(40) + 0.4 / 40) / 40)
    p = np.array([0.05, -0.3j])
    X = rng.normal(size=(5000, 4)) * 0.3
    S = rng.normal(size=(64, 4))
    S = 0.5 * S / np.linalg.norm(S, axis=1)[:, None]
    return {
        "poly_eval_batch": ("poly_eval_batch", (exps, coeffs, comp, n, Z)),
        "aberth": ("aberth", (c, z0, 1e-14, 500)),
        "ball_objective_batch": ("ball_objective_batch", (p, X)),
        "sphere_descent": ("sphere_descent", (p, np.zeros(4), 0.5, 3, 1, -0.1, S, 1e-7, 1e-10, 3000)),
    }


def best_of(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<22}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}{'compile [s]':>13}")
    for name, (attr, fargs) in cases(rng).items():
        t_np = best_of(getattr(numpy_backend, attr), fargs, args.repeat)
        if numba_backend is None:
            print(f"{name:<22}{t_np:>12.4f}{'n/a':>12}")
            continue
        fn = getattr(numba_backend, attr)
        t0 = time.perf_counter()
        fn(*fargs)
        compile_t = time.perf_counter() - t0
        t_nb = best_of(fn, fargs, args.repeat)
        print(f"{name:<22}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>9.1f}x{compile_t:>13.3f}")


if __name__ == "__main__":
    main()
