"""Timing comparison of the compiled kernels against the pure-python path.

Run twice:

    python3 benchmarks/bench_kernels.py
    FAIRAUDIT_DISABLE_NUMBA=1 python3 benchmarks/bench_kernels.py

and compare the per-call times.  The first compiled call includes JIT
compilation and is reported separately.
"""

import time

import numpy as np

from fairaudit import kernels


def bench(label, func, *args, repeat=5):
    t0 = time.perf_counter()
    func(*args)
    first = time.perf_counter() - t0
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        func(*args)
        times.append(time.perf_counter() - t0)
    best = min(times)
    print(f"{label:28s} first={first * 1e3:9.2f} ms  best={best * 1e3:9.2f} ms")
    return best


def main():
    mode = "numba" if kernels.USE_NUMBA else "pure python fallback"
    print(f"kernel path: {mode}")
    rng = np.random.default_rng(0)

    n, k = 2000, 20
    X = rng.normal(size=(n, k))
    y_bin = (rng.random(n) < 0.4).astype(np.float64)
    y_reg = rng.normal(size=n)
    bench("best_split_gini 2000x20", kernels.best_split_gini, X, y_bin)
    bench("best_split_var  2000x20", kernels.best_split_var, X, y_reg)

    train_X = rng.normal(size=(1500, 10))
    train_y = (rng.random(1500) < 0.5).astype(np.float64)
    test_X = rng.normal(size=(300, 10))
    bench("knn_scores 1500->300 k=5", kernels.knn_scores, train_X, train_y, test_X, 5)

    X2 = rng.normal(size=(1200, 10))
    y2 = (rng.random(1200) < 0.5).astype(np.float64)
    fold = rng.permutation(1200) % 5
    bench(
        "knn_loo_fold_errors 1200",
        kernels.knn_loo_fold_errors,
        np.ascontiguousarray(X2),
        y2,
        np.ascontiguousarray(fold, dtype=np.int64),
        5,
        5,
    )


if __name__ == "__main__":
    main()
