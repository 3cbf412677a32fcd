"""Hot loops: revised-simplex pivoting and basic-solution enumeration.

Each kernel is written in the numba-compatible subset of numpy and compiled
through :func:`l1tes._accel.maybe_njit`. Vertex enumeration also has a batched
pure-numpy twin, since its scalar loops are hopeless in the interpreter.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

from ._accel import NUMBA_ENABLED, maybe_njit

# simplex_core status codes
OPTIMAL, UNBOUNDED, MAX_ITERS = 0, 1, 2
BLAND, LEXICOGRAPHIC = 0, 1


@maybe_njit
def refactor(AT, basis, b):
    m = basis.size
    B = np.empty((m, m))
    for i in range(m):
        B[:, i] = AT[basis[i]]
    Binv = np.ascontiguousarray(np.linalg.inv(B))
    return Binv, Binv @ b


@maybe_njit
def simplex_core(AT, b, c, basis, Binv, xB, allowed, max_iter, tol_opt, pivot_tol,
                 refactor_every, degenerate_limit, anti_cycling,
                 log_enter, log_leave, log_obj):
    """Revised primal simplex on min c^T x, A x = b, x >= 0 from a feasible basis.

    ``AT`` is A transposed (n x m, C-contiguous). ``basis``, ``Binv`` and ``xB``
    are updated in place. Dantzig pricing is used until ``degenerate_limit``
    consecutive degenerate pivots have occurred; from then on the
    ``anti_cycling`` rule (Bland or lexicographic ratio test) stays engaged.
    Returns (status, pivots, refactored Binv, xB).
    """
    n, m = AT.shape
    is_basic = np.zeros(n, dtype=np.bool_)
    for i in range(m):
        is_basic[basis[i]] = True
    streak = 0
    guarded = False
    since_refactor = 0
    it = 0
    while True:
        y = np.zeros(m)
        for i in range(m):
            cb = c[basis[i]]
            if cb != 0.0:
                y += cb * Binv[i]
        d = c - AT @ y

        q = -1
        best = -tol_opt
        use_bland = guarded and anti_cycling == BLAND
        for j in range(n):
            if allowed[j] and not is_basic[j] and d[j] < -tol_opt:
                if use_bland:
                    q = j
                    break
                if d[j] < best:
                    best = d[j]
                    q = j
        if q < 0:
            return OPTIMAL, it, Binv, xB
        if it >= max_iter:
            return MAX_ITERS, it, Binv, xB

        u = Binv @ AT[q]
        r = -1
        theta = np.inf
        for i in range(m):
            if u[i] > pivot_tol:
                ratio = max(xB[i], 0.0) / u[i]
                if r < 0 or ratio < theta - 1e-12 * (1.0 + theta):
                    r = i
                    theta = ratio
                elif ratio <= theta + 1e-12 * (1.0 + theta):
                    if guarded and anti_cycling == BLAND:
                        if basis[i] < basis[r]:
                            r = i
                            theta = min(theta, ratio)
                    elif guarded:
                        # lexicographic: compare rows of Binv scaled by the pivot column
                        for k in range(m):
                            a = Binv[i, k] / u[i]
                            bb = Binv[r, k] / u[r]
                            if a < bb - 1e-14:
                                r = i
                                theta = min(theta, ratio)
                                break
                            if a > bb + 1e-14:
                                break
                    elif u[i] > u[r]:
                        r = i
                        theta = min(theta, ratio)
        if r < 0:
            return UNBOUNDED, it, Binv, xB

        if theta <= 1e-12:
            streak += 1
            if streak >= degenerate_limit:
                guarded = True
        else:
            streak = 0

        xB -= theta * u
        xB[r] = theta
        pr = Binv[r] / u[r]
        for i in range(m):
            if i != r and u[i] != 0.0:
                Binv[i] -= u[i] * pr
        Binv[r] = pr
        is_basic[basis[r]] = False
        is_basic[q] = True
        if it < log_enter.size:
            log_enter[it] = q
            log_leave[it] = basis[r]
        basis[r] = q
        it += 1
        since_refactor += 1
        if since_refactor >= refactor_every:
            Binv, xB = refactor(AT, basis, b)
            since_refactor = 0
        if it <= log_obj.size:
            obj = 0.0
            for i in range(m):
                obj += c[basis[i]] * xB[i]
            log_obj[it - 1] = obj


# --- vertex enumeration ------------------------------------------------------

@maybe_njit
def _next_combination(idx, n_items):
    k = idx.size
    i = k - 1
    while i >= 0 and idx[i] == n_items - k + i:
        i -= 1
    if i < 0:
        return False
    idx[i] += 1
    for j in range(i + 1, k):
        idx[j] = idx[j - 1] + 1
    return True


@maybe_njit
def _solve_square(S, r, sing_tol):
    n = S.shape[0]
    a = S.copy()
    x = r.copy()
    scale = np.abs(a).max()
    if scale == 0.0:
        return False, x
    for col in range(n):
        piv = col
        for i in range(col + 1, n):
            if abs(a[i, col]) > abs(a[piv, col]):
                piv = i
        if abs(a[piv, col]) <= sing_tol * scale:
            return False, x
        if piv != col:
            for k in range(n):
                tmp = a[col, k]
                a[col, k] = a[piv, k]
                a[piv, k] = tmp
            tmp = x[col]
            x[col] = x[piv]
            x[piv] = tmp
        for i in range(col + 1, n):
            f = a[i, col] / a[col, col]
            if f != 0.0:
                for k in range(col, n):
                    a[i, k] -= f * a[col, k]
                x[i] -= f * x[col]
    for i in range(n - 1, -1, -1):
        acc = x[i]
        for k in range(i + 1, n):
            acc -= a[i, k] * x[k]
        x[i] = acc / a[i, i]
    return True, x


@maybe_njit
def enumerate_vertices(E, e, G, h, c, feas_tol, sing_tol):
    """Best basic feasible solution of min c^T x, E x = e, G x <= h.

    Every choice of ``n - len(e)`` rows of G is made active together with all
    equality rows. Returns (found, best_x, best_obj, n_feasible).
    """
    p, n = E.shape
    m = G.shape[0]
    k = n - p
    best_x = np.zeros(n)
    best = np.inf
    n_feas = 0
    if k < 0 or k > m:
        return False, best_x, best, 0
    idx = np.arange(k)
    S = np.empty((n, n))
    r = np.empty(n)
    for i in range(p):
        S[i] = E[i]
        r[i] = e[i]
    more = True
    while more:
        for j in range(k):
            S[p + j] = G[idx[j]]
            r[p + j] = h[idx[j]]
        ok, x = _solve_square(S, r, sing_tol)
        if ok:
            feasible = True
            for i in range(m):
                if G[i] @ x > h[i] + feas_tol * (1.0 + abs(h[i])):
                    feasible = False
                    break
            if feasible:
                n_feas += 1
                obj = c @ x
                if obj < best:
                    best = obj
                    best_x = x
        more = _next_combination(idx, m) if k > 0 else False
    return n_feas > 0, best_x, best, n_feas


def enumerate_vertices_numpy(E, e, G, h, c, feas_tol, sing_tol, chunk=20000):
    """Batched numpy twin of :func:`enumerate_vertices` (same enumeration order)."""
    p, n = E.shape
    m = G.shape[0]
    k = n - p
    if k < 0 or k > m:
        return False, np.zeros(n), np.inf, 0
    combos = itertools.combinations(range(m), k)
    best, best_x, n_feas = np.inf, np.zeros(n), 0
    while True:
        items = list(itertools.islice(combos, chunk))
        block = np.array(items, dtype=np.intp).reshape(len(items), k)
        if block.shape[0] == 0:
            break
        nb = block.shape[0]
        S = np.empty((nb, n, n))
        rhs = np.empty((nb, n))
        S[:, :p] = E
        rhs[:, :p] = e
        S[:, p:] = G[block]
        rhs[:, p:] = h[block]
        sv = np.linalg.svd(S, compute_uv=False)
        good = sv[:, -1] > sing_tol * np.maximum(sv[:, 0], 1e-300)
        if np.any(good):
            xs = np.linalg.solve(S[good], rhs[good][..., None])[..., 0]
            viol = xs @ G.T - h - feas_tol * (1.0 + np.abs(h))
            feas = np.all(viol <= 0.0, axis=1)
            n_feas += int(feas.sum())
            if np.any(feas):
                objs = xs[feas] @ c
                j = int(np.argmin(objs))
                if objs[j] < best:
                    best, best_x = float(objs[j]), xs[feas][j]
        if nb < chunk:
            break
    return n_feas > 0, best_x, best, n_feas


def n_bases(m: int, k: int) -> int:
    return math.comb(m, k) if 0 <= k <= m else 0


__all__ = [
    "NUMBA_ENABLED", "simplex_core", "refactor", "enumerate_vertices",
    "enumerate_vertices_numpy", "n_bases", "OPTIMAL", "UNBOUNDED", "MAX_ITERS",
    "BLAND", "LEXICOGRAPHIC",
]
