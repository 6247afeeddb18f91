"""Time the master-equation RK4 kernels: compiled banded, numpy banded, dense.

    python3 benchmarks/bench_kernels.py --dims 20 40 60 --steps 2000
"""

import argparse
import time

import numpy as np

from fockbench import QBMParams, build_operators, coherent_state, master_rhs, projector
from fockbench import _kernels_py
from fockbench.kernels import bands

try:
    from fockbench import _kernels as _compiled
except ImportError:
    _compiled = None


def dense_rk4(rho, n_steps, dt, ops, q):
    y = rho.copy()
    for _ in range(n_steps):
        k1 = master_rhs(y, ops, q)
        k2 = master_rhs(y + 0.5 * dt * k1, ops, q)
        k3 = master_rhs(y + 0.5 * dt * k2, ops, q)
        k4 = master_rhs(y + dt * k3, ops, q)
        y = y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


def best_of(fn, repeats):
    times = []
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--dims", type=int, nargs="+", default=[20, 40, 60])
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args(argv)

    q = QBMParams(gamma=1e-3, kT=100.0)
    dt = q.osc.period / 4000
    print(f"{'D':>4} {'backend':>10} {'seconds':>10} {'us/step':>10} {'max|diff|':>11}")
    for D in args.dims:
        ops = build_operators(D)
        rho = projector(coherent_state(1.0, D))
        h, xu, pu = bands(ops)
        consts = (q.osc.hbar, q.gamma, q.diffusion)
        runs = {
            "dense": lambda: dense_rk4(rho, args.steps, dt, ops, q),
            "numpy": lambda: _kernels_py.rk4_steps(rho, args.steps, dt, h, xu, pu, *consts),
        }
        if _compiled is not None:
            runs["cython"] = lambda: _compiled.rk4_steps(rho, args.steps, dt, h, xu, pu, *consts)
        ref = None
        for name, fn in runs.items():
            secs, out = best_of(fn, args.repeats)
            ref = out if ref is None else ref
            diff = float(np.max(np.abs(out - ref)))
            print(f"{D:>4} {name:>10} {secs:>10.4f} {1e6 * secs / args.steps:>10.2f} {diff:>11.2e}")


if __name__ == "__main__":
    main()
