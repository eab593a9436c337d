"""Time the numba and pure-numpy kernels against each other.

Each backend runs in its own interpreter because the backend is fixed at
import time by ``AFR_USE_NUMBA``. Usage::

    python3 benchmarks/bench_kernels.py [--n 5000] [--p 20] [--dim 8] [--repeats 5]
"""
import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from afr import _accel, _kernels, optimizer
from afr.basis import BasisConfig, expand

n, p, dim, repeats = map(int, sys.argv[1:5])
rng = np.random.default_rng(0)
X = rng.uniform(size=(n, p))
cfg = BasisConfig("bspline", dim)

def best(fn):
    fn()  # warm-up, includes JIT compilation when numba is active
    times = []
    for _ in range(repeats):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)

phi = expand(X, cfg).phi
y = rng.choice([-1.0, 1.0], n)
b = -rng.uniform(0.2, 1.0, n)
solver = optimizer.SolverConfig(lam=1e-3, eps=1e-300, inner_max_iter=200)
v = rng.normal(size=p * dim)
thr = rng.uniform(0, 1, p)
print(json.dumps({
    "backend": _accel.backend_name(),
    "bspline_expand": best(lambda: expand(X, cfg)),
    "group_soft_threshold": best(lambda: [_kernels.group_soft_threshold(v, thr, dim, 2) for _ in range(1000)]),
    "admm_solve_200_iters": best(lambda: optimizer.admm_solve(phi, y, b, solver, dim)),
}))
"""


def run(flag, args):
    env = dict(os.environ, AFR_USE_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", WORKER, str(args.n), str(args.p), str(args.dim),
                          str(args.repeats)], env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=5000)
    ap.add_argument("--p", type=int, default=20)
    ap.add_argument("--dim", type=int, default=8)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()
    fast, slow = run("1", args), run("0", args)
    print(f"n={args.n} p={args.p} d={args.dim}; best of {args.repeats}")
    print(f"{'kernel':<24}{fast['backend']:>12}{slow['backend']:>12}{'speedup':>10}")
    for key in ("bspline_expand", "group_soft_threshold", "admm_solve_200_iters"):
        print(f"{key:<24}{fast[key] * 1e3:>10.2f}ms{slow[key] * 1e3:>10.2f}ms{slow[key] / fast[key]:>9.1f}x")


if __name__ == "__main__":
    main()
