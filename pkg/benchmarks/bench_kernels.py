"""Compiled vs pure-Python kernels.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Times the two QP inner loops directly on random dual problems of the sizes
that occur inside the solvers, then an end-to-end bundle-level run in a
subprocess per backend (the backend is fixed at import).
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from pwsbl import kernels

END_TO_END = """
import time, numpy as np
from pwsbl import KERNEL_BACKEND
from pwsbl.gapred import bl_mu
from pwsbl.problems import make_max_of_quadratics
inst = make_max_of_quadratics(5, 8, 10.0, 1.0, seed=3)
t = time.perf_counter()
for s in range(3):
    bl_mu(inst, np.random.default_rng(s).standard_normal(8), 1.0, 7, 1e-8)
print(KERNEL_BACKEND, time.perf_counter() - t)
"""


def _problems(m, count, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        A = rng.standard_normal((m, max(2, m // 2)))
        out.append((A @ A.T + 1e-6 * np.eye(m), rng.standard_normal(m), A))
    return out


def bench_kernel(name, m, repeat):
    probs = _problems(m, 50)
    times = {}
    for backend in ("python", "cython"):
        if backend == "cython" and kernels.BACKEND != "cython":
            continue
        if name == "hildreth":
            fn = lambda: [kernels.hildreth(G, q, max_sweeps=200, tol=0.0, backend=backend) for G, q, _ in probs]
        else:
            fn = lambda: [kernels.min_norm_simplex(A @ A.T, max_iter=200, tol=0.0, backend=backend) for _, _, A in probs]
        times[backend] = min(timeit.repeat(fn, number=1, repeat=repeat)) / len(probs)
    return times


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"import-time backend: {kernels.BACKEND}")
    print(f"{'kernel':<18}{'m':>4}{'python [us]':>14}{'cython [us]':>14}{'speedup':>10}")
    for name in ("hildreth", "min_norm_simplex"):
        for m in (4, 8, 16):
            t = bench_kernel(name, m, args.repeat)
            py = t["python"] * 1e6
            cy = t.get("cython")
            cy_s = f"{cy * 1e6:14.1f}" if cy else f"{'n/a':>14}"
            sp = f"{t['python'] / cy:10.1f}" if cy else f"{'':>10}"
            print(f"{name:<18}{m:>4}{py:14.1f}{cy_s}{sp}")
    print("\nend-to-end: bl_mu on a 5-piece, 8-dimensional instance (3 starts)")
    for pure in ("0", "1"):
        env = dict(os.environ, PWSBL_PURE_PYTHON=pure)
        out = subprocess.run([sys.executable, "-c", END_TO_END], env=env, capture_output=True, text=True, check=True)
        backend, secs = out.stdout.split()[-2:]
        print(f"  {backend:<8}{float(secs):8.2f} s")


if __name__ == "__main__":
    main()
