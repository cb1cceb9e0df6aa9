"""Compare the numba and numpy solver kernels.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--dims 8 16 32 50]

Reports the best wall time per backend for the column projection and for a
full solve on a normalized integer witness, plus the value agreement.
"""
import argparse
import time

import numpy as np

from schurkit import _kernels
from schurkit.thinset import SolverOptions, maximize_objective, sample_integer_symmetric, schatten1


def best_time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--dims", type=int, nargs="+", default=[8, 16, 32, 50])
    args = ap.parse_args(argv)

    backends = ["numpy"] + (["numba"] if _kernels.HAVE_NUMBA else [])
    # warm up the jit so compile time is not measured
    for b in backends:
        maximize_objective(np.eye(3), SolverOptions(backend=b))

    print(f"{'n':>4} {'kernel':>10} " + " ".join(f"{b:>12}" for b in backends) + "   speedup   |dvalue|")
    for n in args.dims:
        T = sample_integer_symmetric(n, np.random.default_rng(n)).astype(float)
        T /= schatten1(T)
        Y = np.random.default_rng(n + 1).standard_normal((n, n))

        proj = [best_time(lambda b=b: _kernels.kernels(b)[0](Y), args.repeat * 20)[0] for b in backends]
        solve = [best_time(lambda b=b: maximize_objective(T, SolverOptions(backend=b)), args.repeat)
                 for b in backends]
        dval = abs(solve[0][1].value - solve[-1][1].value)
        for name, times in (("project", proj), ("solve", [s[0] for s in solve])):
            speed = times[0] / times[-1]
            extra = f"{dval:10.1e}" if name == "solve" else ""
            print(f"{n:>4} {name:>10} " + " ".join(f"{t * 1e3:10.3f}ms" for t in times)
                  + f"   {speed:7.2f}x {extra}")


if __name__ == "__main__":
    main()
