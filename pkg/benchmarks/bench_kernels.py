"""Head-to-head timing of the pure-numpy and compiled kernel backends.

The three hot kernels are imported from both implementation modules and
timed on workloads shaped like the real call sites (trajectory scoring,
witness search scoring, certificate refinement). The end-to-end row runs
the full branch-and-bound certificate in a subprocess per backend, using
the SHADOWLAB_PURE toggle honoured by the dispatcher.

Usage: python3 benchmarks/bench_kernels.py [--repeat N] [--quick]
"""

import argparse
import math
import os
import subprocess
import sys
import time

import numpy as np

from shadowlab import _core_pure
from shadowlab import operators as ops
from shadowlab import trajectories as trj

try:
    from shadowlab import _core
except ImportError:
    _core = None

_END_TO_END = """
import time
from shadowlab import kernels, operators as ops, trajectories as trj, solvers as sv
beta = complex(%r, %r)
spec = ops.JordanBlock(beta, 2)
trajs = [
    trj.gen_adversarial("jordan-impulse", {"beta": beta, "k": 2, "delta": 1e-3},
                        trj.Window("bilateral", N))
    for N in (25, 50, 100, 200)
]
t0 = time.perf_counter()
rungs = sv.divergence_certificate(trajs, spec)
dt = time.perf_counter() - t0
assert all(r.status == "certified" for r in rungs)
print(kernels.backend_name(), dt)
"""


def _best_of(fn, repeat):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _workloads(quick):
    rng = np.random.default_rng(20260816)

    def cx(*shape):
        return rng.normal(size=shape) + 1j * rng.normal(size=shape)

    n_traj = 5000 if quick else 20000
    X_big = cx(n_traj, 3)
    V_big = cx(n_traj, 3)

    beta = complex(math.cos(math.pi / 4), math.sin(math.pi / 4))
    spec = ops.JordanBlock(beta, 2)
    traj = trj.gen_adversarial(
        "jordan-impulse", {"beta": beta, "k": 2, "delta": 1e-3},
        trj.Window("bilateral", 200),
    )
    P = ops.power_stack(spec, traj.window.n_min, traj.window.n_max)
    X = traj.points
    xn = np.linalg.norm(X, axis=1)
    sv_pows = np.linalg.svd(P, compute_uv=False)
    pn, sm = sv_pows[:, 0], sv_pows[:, -1]
    ss = sv_pows[:, 0] * sv_pows[:, 1]
    m = 1024 if quick else 4096
    Q = cx(m, 2)
    Q /= np.linalg.norm(Q, axis=1)[:, None]
    h = rng.uniform(1e-3, 0.2, size=m)

    return [
        (
            f"opt_lambda_residuals ({n_traj} x 3)",
            lambda impl: impl.opt_lambda_residuals(X_big, V_big),
        ),
        (
            f"sup_residuals (window 401, {m} candidates)",
            lambda impl: impl.sup_residuals(P, X, Q),
        ),
        (
            f"certified_lows (window 401, {m} cells)",
            lambda impl: impl.certified_lows(P, X, xn, pn, ss, sm, Q, h),
        ),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3, help="best-of repetitions")
    ap.add_argument("--quick", action="store_true", help="smaller workloads")
    args = ap.parse_args(argv)

    if _core is None:
        print("compiled backend not built; timing the pure backend only")
    impls = [("pure", _core_pure)] + ([("compiled", _core)] if _core else [])

    rows = []
    for label, fn in _workloads(args.quick):
        times = {name: _best_of(lambda: fn(impl), args.repeat) for name, impl in impls}
        rows.append((label, times))

    # end-to-end certificate through the dispatcher, one subprocess per backend
    beta = complex(math.cos(math.pi / 4), math.sin(math.pi / 4))
    e2e = {}
    for name, env_val in [("pure", "1"), ("compiled", "")]:
        if name == "compiled" and _core is None:
            continue
        env = dict(os.environ)
        if env_val:
            env["SHADOWLAB_PURE"] = env_val
        else:
            env.pop("SHADOWLAB_PURE", None)
        best = math.inf
        for _ in range(args.repeat):
            out = subprocess.run(
                [sys.executable, "-c", _END_TO_END % (beta.real, beta.imag)],
                check=True, capture_output=True, text=True, env=env,
            ).stdout.split()
            assert out[0] == name, f"backend toggle failed: {out[0]} != {name}"
            best = min(best, float(out[1]))
        e2e[name] = best
    rows.append(("divergence_certificate ladder 25..200", e2e))

    width = max(len(r[0]) for r in rows)
    header = f"{'workload':<{width}}  {'pure (s)':>10}  {'compiled (s)':>12}  {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for label, times in rows:
        p = times.get("pure", math.nan)
        c = times.get("compiled", math.nan)
        ratio = f"{p / c:7.2f}x" if ("compiled" in times and c > 0) else "     n/a"
        print(f"{label:<{width}}  {p:>10.4f}  {c:>12.4f}  {ratio:>8}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
