"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5] [--n 1500] [--B 500]

Prints the best wall time of each kernel for both backends and the speedup.
"""

import argparse
import timeit

import numpy as np

from kbmom import _kernels_py as py

try:
    from kbmom import _kernels as cy
except ImportError:
    cy = None


def cases(n, p, K, B, nB, seed=0):
    g = np.random.default_rng(seed)
    X = g.standard_normal((n, p)) * 3
    idx = g.integers(0, n, size=(B, nB))
    C = X[g.choice(n, K, replace=False)]
    u = g.random((B, K, 2 + int(np.log(K))))
    return {
        "assign": lambda m: m.assign(X, C),
        "block_update": lambda m: m.block_update(X, idx, C),
        "block_seed": lambda m: m.block_seed(X, idx, u, 2),
        "block_lloyd": lambda m: m.block_lloyd(X, idx, C, 30, 1e-6),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--n", type=int, default=1500)
    ap.add_argument("--p", type=int, default=3)
    ap.add_argument("--K", type=int, default=5)
    ap.add_argument("--B", type=int, default=500)
    ap.add_argument("--nB", type=int, default=25)
    args = ap.parse_args()
    if cy is None:
        print("compiled extension not built; run `python setup.py build_ext --inplace`")
    print(f"n={args.n} p={args.p} K={args.K} B={args.B} n_B={args.nB}")
    print(f"{'kernel':<14} {'python (ms)':>12} {'cython (ms)':>12} {'speedup':>8}")
    for name, fn in cases(args.n, args.p, args.K, args.B, args.nB).items():
        t_py = min(timeit.repeat(lambda: fn(py), number=1, repeat=args.repeat)) * 1e3
        if cy is None:
            print(f"{name:<14} {t_py:12.3f} {'-':>12} {'-':>8}")
            continue
        t_cy = min(timeit.repeat(lambda: fn(cy), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<14} {t_py:12.3f} {t_cy:12.3f} {t_py / t_cy:8.2f}")


if __name__ == "__main__":
    main()
