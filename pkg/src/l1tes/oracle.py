"""Exact small-LP solver by exhaustive enumeration of basic solutions.

Serves as ground truth for the iterative solvers. Only practical for a handful
of variables; :class:`OracleLimits` guards the combinatorial blow-up.
"""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import kernels
from .problem import LpProblem, SolverId, SolverReport, Status

MAX_BASES = 10**7


class OracleLimitError(ValueError):
    pass


@dataclass(frozen=True)
class OracleLimits:
    max_vars: int = 8
    max_rows: int = 14


def _canonical(lp: LpProblem):
    """(G, h, E, e, c): all inequalities incl. sign bounds, duplicates removed."""
    n = lp.n_vars
    idx = np.flatnonzero(lp.nonneg)
    bounds = np.zeros((idx.size, n))
    bounds[np.arange(idx.size), idx] = -1.0
    G = np.vstack([bounds, lp.A_ub])
    h = np.concatenate([np.zeros(idx.size), lp.b_ub])
    _, keep = np.unique(np.hstack([G, h[:, None]]), axis=0, return_index=True)
    keep = np.sort(keep)  # first occurrence wins, sign bounds come first
    n_rows = int(np.sum(keep >= idx.size)) + lp.n_eq
    return G[keep], h[keep], lp.A_eq.copy(), lp.b_eq.copy(), lp.min_form_cost().copy(), n_rows


def _nullspace(M, n, tol=1e-10):
    if M.shape[0] == 0:
        return np.eye(n)
    _, sv, vt = np.linalg.svd(M)
    rank = int(np.sum(sv > tol * max(sv[0], 1e-300)))
    return vt[rank:].T


def _has_improving_ray(G, E, c, tol=1e-9):
    """True if the recession cone {G d <= 0, E d = 0} holds an extreme ray with c^T d < 0.

    Assumes the cone is pointed, so its extreme rays are the one-dimensional
    solution sets of n-1 independent active constraints.
    """
    p, n = E.shape
    k = n - 1 - p
    if k < 0:
        return False
    gscale = np.linalg.norm(G, axis=1) + 1e-300
    if n == 1:
        cand = np.array([[1.0], [-1.0]])
        inside = np.all(cand @ G.T <= tol * gscale, axis=1)
        return bool(np.any(inside & (cand @ c < -tol * (1.0 + np.abs(c).max()))))
    for combo in _chunks(itertools.combinations(range(G.shape[0]), k), 20000, k):
        M = np.empty((combo.shape[0], n - 1, n))
        M[:, :p] = E
        M[:, p:] = G[combo]
        _, sv, vt = np.linalg.svd(M)
        ok = sv[:, -1] > 1e-10 * np.maximum(sv[:, 0], 1e-300)
        d = vt[ok, -1, :]
        if d.size == 0:
            continue
        for sign in (1.0, -1.0):
            ds = sign * d
            inside = np.all(ds @ G.T <= tol * gscale, axis=1)
            if np.any(inside & (ds @ c < -tol * (1.0 + np.abs(c).max()))):
                return True
    return False


def _chunks(it, size, width):
    while True:
        items = list(itertools.islice(it, size))
        block = np.array(items, dtype=np.intp).reshape(len(items), width)
        if block.shape[0] == 0:
            return
        yield block
        if block.shape[0] < size:
            return


def solve_exact(lp: LpProblem, lim: OracleLimits | None = None):
    """Exhaustive optimum of a small LP; returns ``(x, SolverReport)``.

    Rows that merely repeat a sign constraint are merged before the size check.
    """
    lim = lim or OracleLimits()
    t0 = time.perf_counter()
    G, h, E, e, c, n_rows = _canonical(lp)
    n = lp.n_vars
    if n > lim.max_vars or n_rows > lim.max_rows:
        raise OracleLimitError(f"LP with {n} vars / {n_rows} rows exceeds oracle limits {lim}")

    # directions along which the whole feasible set is invariant
    N = _nullspace(np.vstack([G, E]), n)
    lineality_improves = N.shape[1] > 0 and np.abs(c @ N).max() > 1e-12 * (1.0 + np.abs(c).max())
    if N.shape[1]:
        E = np.vstack([E, N.T])
        e = np.concatenate([e, np.zeros(N.shape[1])])
    if kernels.n_bases(G.shape[0], n - E.shape[0]) >= MAX_BASES:
        raise OracleLimitError("basis count exceeds the enumeration budget")

    enum = kernels.enumerate_vertices if kernels.NUMBA_ENABLED else kernels.enumerate_vertices_numpy
    found, x, best, n_feas = enum(
        np.ascontiguousarray(E), np.ascontiguousarray(e), np.ascontiguousarray(G),
        np.ascontiguousarray(h), np.ascontiguousarray(c), 1e-9, 1e-12,
    )
    x = np.asarray(x)
    if not found:
        status = Status.INFEASIBLE
    elif lineality_improves or _has_improving_ray(G, E, c):
        status = Status.UNBOUNDED
    else:
        status = Status.OPTIMAL
    report = SolverReport(
        status=status, solver_id=SolverId.ORACLE,
        iterations=kernels.n_bases(G.shape[0], n - E.shape[0]),
        objective=lp.objective(x) if found else float("nan"),
        wall_time=time.perf_counter() - t0,
    )
    return x, report


# --- rational re-check -------------------------------------------------------

def _frac_solve(S, r):
    n = len(S)
    a = [row[:] + [r[i]] for i, row in enumerate(S)]
    for col in range(n):
        piv = next((i for i in range(col, n) if a[i][col] != 0), None)
        if piv is None:
            return None
        a[col], a[piv] = a[piv], a[col]
        for i in range(n):
            if i != col and a[i][col] != 0:
                f = a[i][col] / a[col][col]
                a[i] = [vi - f * vc for vi, vc in zip(a[i], a[col])]
    return [a[i][n] / a[i][i] for i in range(n)]


def solve_exact_rational(lp: LpProblem):
    """Same enumeration in exact rational arithmetic (floats converted exactly).

    Intended for bounded instances with a handful of variables; returns
    ``(x, optimum)`` as lists of :class:`fractions.Fraction`.
    """
    G, h, E, e, c, _ = _canonical(lp)
    F = Fraction
    Gq = [[F(v) for v in row] for row in G]
    hq = [F(v) for v in h]
    Eq = [[F(v) for v in row] for row in E]
    eq = [F(v) for v in e]
    cq = [F(v) for v in c]
    n = lp.n_vars
    best, best_x = None, None
    for combo in itertools.combinations(range(len(Gq)), n - len(Eq)):
        S = Eq + [Gq[i] for i in combo]
        r = eq + [hq[i] for i in combo]
        x = _frac_solve(S, r)
        if x is None:
            continue
        if all(sum(g * xi for g, xi in zip(row, x)) <= hi for row, hi in zip(Gq, hq)):
            val = sum(ci * xi for ci, xi in zip(cq, x))
            if best is None or val < best:
                best, best_x = val, x
    if best is None:
        raise ValueError("no feasible basic solution")
    return best_x, (best if lp.sense == "min" else -best)
