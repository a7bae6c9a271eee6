"""Compare the numba and numpy backends of the Monte Carlo field pipeline.

    python3 benchmarks/bench_accel.py [--n 32] [--batch 1024] [--repeat 5]

Each kernel is warmed up once (numba compiles on first call), then timed as
the best of ``--repeat`` runs.  Outputs of both backends are checked to agree.
"""
import argparse
import time

import numpy as np

from sheetlaw import _accel


def _cases(z, W):
    return {
        "sheet_from_normals": lambda: _accel.sheet_from_normals(z),
        "derive(b0)": lambda: _accel.derive(W, 2),
        "quad(double)": lambda: _accel.quad(W, 4),
        "reflect(T4)": lambda: _accel.reflect(W, -1, -1),
        "quarter_quad": lambda: _accel.quarter_quad(W),
    }


def _best(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--n", type=int, default=32)
    p.add_argument("--batch", type=int, default=1024)
    p.add_argument("--repeat", type=int, default=5)
    a = p.parse_args()

    z = np.random.default_rng(0).standard_normal((a.batch, a.n, a.n))
    W = _accel._np_sheet(z)
    if not _accel.HAVE_NUMBA:
        print("numba not installed; only the numpy backend is available")
    print(f"batch={a.batch} n={a.n}")
    print(f"{'kernel':20s} {'numpy [ms]':>12s} {'numba [ms]':>12s} {'speedup':>8s}")
    for name in _cases(z, W):
        with _accel.use_backend("numpy"):
            ref = _cases(z, W)[name]()
            t_np = _best(_cases(z, W)[name], a.repeat)
        if _accel.HAVE_NUMBA:
            with _accel.use_backend("numba"):
                out = _cases(z, W)[name]()
                t_nb = _best(_cases(z, W)[name], a.repeat)
            np.testing.assert_allclose(out, ref, rtol=1e-10, atol=1e-12)
            print(f"{name:20s} {1e3 * t_np:12.2f} {1e3 * t_nb:12.2f} {t_np / t_nb:8.2f}")
        else:
            print(f"{name:20s} {1e3 * t_np:12.2f} {'-':>12s} {'-':>8s}")


if __name__ == "__main__":
    main()
