"""Time every counting kernel under the numba and numpy backends.

    python benchmarks/bench_kernels.py [--repeat 5] [--scale 1.0]

Prints one line per (kernel, backend) with the best wall time, and checks
that both backends return identical arrays.  ``--scale`` multiplies the
user count.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from dpagnostic import _kernels
from dpagnostic.dp_core import make_rng
from dpagnostic.model import HypothesisClass, UserDataset


def workloads(scale: float):
    rng = make_rng(2024)
    n, m, X = int(4000 * scale), 16, 1024
    xs = rng.integers(1, X + 1, size=(n, m))
    ys = rng.integers(0, 2, size=(n, m)).astype(np.uint8)
    z = UserDataset(xs, ys, X)
    thresholds = HypothesisClass.thresholds(X)
    cu = thresholds.threshold_values
    err = _kernels.numpy_backend.threshold_user_errors(z.sorted_xs, z.sorted_ys, 2, X)
    hv = cu[::8].copy()

    Xs, ks = 64, 32
    small = UserDataset(rng.integers(1, Xs + 1, size=(n // 4, m)),
                        rng.integers(0, 2, size=(n // 4, m)), Xs)
    tab_c = rng.integers(0, 2, size=(ks, Xs)).astype(np.uint8)
    tab_h = rng.integers(0, 2, size=(ks, Xs)).astype(np.uint8)
    return {
        "threshold_user_errors": (z.sorted_xs, z.sorted_ys, 2, X),
        "threshold_user_surrogate": (z.sorted_xs, cu, err, hv, 1, X),
        "median_counts": (z.sorted_xs, 0, X, 1),
        "table_user_mistakes": (tab_c, small.xs, small.ys),
        "table_user_disagreements": (tab_c, tab_h, small.xs, 0),
    }


def best_time(fn, args, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def same(a, b) -> bool:
    if isinstance(a, tuple):
        return all(np.array_equal(x, y) for x, y in zip(a, b))
    return np.array_equal(a, b)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--scale", type=float, default=1.0)
    args = ap.parse_args(argv)
    if _kernels.numba_backend is None:
        print("numba is not installed; nothing to compare")
        return 1
    ok = True
    print(f"{'kernel':<28}{'numba (ms)':>12}{'numpy (ms)':>12}{'speedup':>10}")
    for name, call_args in workloads(args.scale).items():
        fast = getattr(_kernels.numba_backend, name)
        slow = getattr(_kernels.numpy_backend, name)
        agree = same(fast(*call_args), slow(*call_args))  # also triggers compilation
        ok &= agree
        t_nb = best_time(fast, call_args, args.repeat)
        t_np = best_time(slow, call_args, args.repeat)
        flag = "" if agree else "  MISMATCH"
        print(f"{name:<28}{t_nb * 1e3:>12.2f}{t_np * 1e3:>12.2f}{t_np / t_nb:>9.1f}x{flag}")
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
