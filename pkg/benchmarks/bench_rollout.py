"""Compare the compiled and NumPy Monte Carlo rollout kernels.

    python benchmarks/bench_rollout.py [--trials N] [--horizon T] [--repeat R]
"""

import argparse
import time

import numpy as np

from lmictl import kernels, powernet, simulate, synthesis


def _time(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=20_000)
    ap.add_argument("--horizon", type=int, default=20)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    print(f"active backend: {kernels.BACKEND}")
    for name in ("example1", "example2"):
        sys, cost, x0 = powernet.builtin(name)
        sched = synthesis.finite_lmi(sys, cost, args.horizon).gains
        cfg = simulate.SimConfig(args.trials, args.horizon, 0, tuple(x0))
        inputs = simulate.kernel_inputs(sys, cost, sched, cfg)
        t_py, c_py = _time(lambda: kernels.rollout_costs_py(*inputs), args.repeat)
        line = f"{name:10s} trials={args.trials} T={args.horizon}  numpy {t_py * 1e3:8.2f} ms"
        if kernels.rollout_costs_compiled is not None:
            t_c, c_c = _time(lambda: kernels.rollout_costs_compiled(*inputs), args.repeat)
            diff = np.abs(np.asarray(c_py) - np.asarray(c_c)).max()
            line += f"  cython {t_c * 1e3:8.2f} ms  speedup {t_py / t_c:5.1f}x  max|diff| {diff:.2e}"
        else:
            line += "  cython unavailable"
        print(line)


if __name__ == "__main__":
    main()
