"""Compiled vs pure-numpy kernels.

Runs each workload in a child process twice, once with numba and once with
``L1TES_DISABLE_NUMBA=1`` (the flag is read at import time), and prints a
comparison table. Results of both paths are checked against each other.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--csv out.csv]
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def _random_lp(seed, n=7, m=11):
    from l1tes.problem import LpProblem

    rng = np.random.default_rng(seed)
    A = rng.normal(size=(m, n))
    b = A @ rng.uniform(size=n) + rng.uniform(0.1, 1.0, size=m)
    A = np.vstack([A, np.ones(n)])
    b = np.append(b, 2.0 * n)
    return LpProblem(rng.normal(size=n), A, b, None, None, np.ones(n, bool))


def _l1l1(seed, electrodes=8, rows=60):
    from l1tes.assembler import L1L1Params, assemble_l1l1
    from l1tes.leadfield import generate_synthetic_leadfield, split_and_project, target_for_point

    lf = generate_synthetic_leadfield(seed, electrodes, rows, 2.0)
    slf = split_and_project(lf, target_for_point(lf, 2, (0, 0, 1)))
    return assemble_l1l1(slf, L1L1Params(alpha=1e-3, epsilon=1e-2))


def workloads():
    from l1tes.oracle import solve_exact
    from l1tes.simplex import SimplexSettings, solve_simplex

    return {
        "oracle_7x12": lambda: [solve_exact(_random_lp(s))[1].objective for s in range(3)],
        "primal_simplex_l1l1": lambda: [solve_simplex(_l1l1(s))[1].objective for s in range(3)],
        "dual_simplex_l1l1": lambda: [solve_simplex(_l1l1(s), SimplexSettings("dual"))[1].objective
                                      for s in range(3)],
    }


def child(repeat: int):
    from l1tes import kernels

    out = {"numba": kernels.NUMBA_ENABLED, "results": {}}
    for name, fn in workloads().items():
        t0 = time.perf_counter()
        values = fn()  # warm-up (includes JIT load or compile)
        first = time.perf_counter() - t0
        best = float("inf")
        for _ in range(repeat):
            t0 = time.perf_counter()
            fn()
            best = min(best, time.perf_counter() - t0)
        out["results"][name] = {"first": first, "best": best, "values": values}
    print(json.dumps(out))


def run_path(disable: bool, repeat: int) -> dict:
    env = dict(os.environ)
    env["L1TES_DISABLE_NUMBA"] = "1" if disable else "0"
    proc = subprocess.run([sys.executable, __file__, "--child", "--repeat", str(repeat)],
                          env=env, capture_output=True, text=True, check=True)
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--csv", help="also write the table as CSV")
    p.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = p.parse_args(argv)
    if args.child:
        child(args.repeat)
        return 0

    fast = run_path(False, args.repeat)
    slow = run_path(True, args.repeat)
    rows = []
    for name in fast["results"]:
        f, s = fast["results"][name], slow["results"][name]
        diff = float(np.max(np.abs(np.subtract(f["values"], s["values"]))))
        rows.append((name, f["best"], s["best"], s["best"] / f["best"], f["first"], diff))
    header = ("workload", "numba_s", "numpy_s", "speedup", "numba_first_call_s", "max_objective_diff")
    print("{:<22} {:>10} {:>10} {:>8} {:>18} {:>18}".format(*header))
    for r in rows:
        print(f"{r[0]:<22} {r[1]:>10.4f} {r[2]:>10.4f} {r[3]:>8.1f} {r[4]:>18.3f} {r[5]:>18.2e}")
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(",".join(header) + "\n")
            for r in rows:
                fh.write(",".join(str(v) for v in r) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
