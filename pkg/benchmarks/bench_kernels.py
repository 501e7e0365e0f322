"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--sizes 100 1000 10000] [--repeat 5]

Reports the best wall time per call for each backend and the speedup.  The
end-to-end rows run the full Sturm-Liouville and isoperimetric solvers, so
they also include the numpy work that does not depend on the backend.
"""
import argparse
import math
import time

import numpy as np

from tsvar import kernels
from tsvar.sturm import SLProblem, solve_eigs
from tsvar.timescale import Interval, build
from tsvar.variational import IsoProblem, solve_iso


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(n, rng):
    d = 2.0 + rng.random(n)
    e = -rng.random(n - 1)
    lo, hi = kernels.gershgorin(d, e)
    mu = rng.uniform(0.5, 1.5, size=n + 1) / n
    c = mu[:-1] * rng.normal(size=n)
    dl, du = rng.normal(size=n - 1), rng.normal(size=n - 1)
    rhs = rng.normal(size=(n, 2))
    idx = np.arange(min(n, 5))
    slope_hi = 4.0 / mu.min() ** 2 + abs(c).max() / mu.min()
    sl = SLProblem(build([Interval(0, math.pi, math.pi / (n + 1))]), "0", len(idx))
    iso = IsoProblem(build([Interval(-1, 1, 2 / (n + 1))]), "x", "sqrt(1+v^2)", 0, 0, math.pi, "max")

    def gtsv(impl):
        impl.gtsv(dl.copy(), d.copy(), du.copy(), rhs.copy())

    return {
        "bisect (5 eigenvalues)": lambda impl: impl.bisect_eigenvalues(d, e, idx, 1e-13, lo, hi),
        "bisect_slope (5 eigenvalues)": lambda impl: impl.bisect_slope(mu, c, mu[:-1], idx, 1e-13,
                                                                     -abs(c).max() / mu.min(), slope_hi),
        "gtsv (2 rhs)": gtsv,
        "solve_eigs k=5": lambda impl: solve_eigs(sl),
        "solve_iso semicircle": lambda impl: solve_iso(iso, lambda0=1.0),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[100, 1000, 10000])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled extension not built; only the python backend is timed")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<30}{'n':>7}" + "".join(f"{b + ' [ms]':>16}" for b in backends) + f"{'speedup':>10}")
    for n in args.sizes:
        for name, fn in cases(n, rng).items():
            row = {}
            for b in backends:
                prev = kernels.use_backend(b)
                try:
                    row[b] = best_time(lambda: fn(kernels.get_backend()), args.repeat)
                finally:
                    kernels.use_backend(prev)
            speed = row["python"] / row["cython"] if "cython" in row else float("nan")
            print(f"{name:<30}{n:>7}" + "".join(f"{1e3 * row[b]:>16.3f}" for b in backends)
                  + f"{speed:>9.1f}x")


if __name__ == "__main__":
    main()
