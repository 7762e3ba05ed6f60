"""Compare the compiled and numpy trajectory kernels.

    python3 benchmarks/bench_kernels.py [--traj N] [--steps K] [--repeat R]

Reports seconds per run and nanoseconds per trajectory-step for each
(d, m) case, plus the largest relative difference between the two outputs.
"""

import argparse
import time

import numpy as np

from qmsirr import gksl, sse
from qmsirr._backend import compiled_kernels, python_kernels


def bench(kern, A, B, xi, n_traj, steps, repeat):
    save = np.array([0, steps], dtype=np.int64)
    out = np.empty((n_traj, 2, A.shape[0]), dtype=complex)
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        kern.propagate(A, B, xi, np.uint64(1), 0, steps, np.sqrt(1.0 / steps), save, out)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--traj", type=int, default=4000)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'d':>3} {'m':>3} {'backend':>8} {'seconds':>9} {'ns/step':>9} {'speedup':>8} {'max rel diff':>13}")
    for d, m in [(2, 1), (3, 1), (4, 2), (8, 2)]:
        model = gksl.random_model(d, m, rng)
        A, B = sse.step_matrices(model, 1.0 / args.steps, sse.EXPONENTIAL_EULER)
        xi = np.eye(d, dtype=complex)[0]
        tp, op = bench(python_kernels, A, B, xi, args.traj, args.steps, args.repeat)
        work = args.traj * args.steps
        print(f"{d:3d} {m:3d} {'python':>8} {tp:9.3f} {1e9 * tp / work:9.1f} {'1.0':>8} {'':>13}")
        if compiled_kernels is None:
            print(f"{d:3d} {m:3d} {'cython':>8}  (not built)")
            continue
        tc, oc = bench(compiled_kernels, A, B, xi, args.traj, args.steps, args.repeat)
        diff = np.max(np.abs(oc - op)) / np.max(np.abs(op))
        print(f"{d:3d} {m:3d} {'cython':>8} {tc:9.3f} {1e9 * tc / work:9.1f} {tp / tc:8.1f} {diff:13.2e}")


if __name__ == "__main__":
    main()
