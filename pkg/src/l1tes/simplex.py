"""Two-phase revised simplex (primal) and a dual variant run on the explicit dual LP."""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import kernels
from .assembler import from_standard_primal, to_standard_primal
from .problem import LpProblem, SolverId, SolverReport, Status


@dataclass(frozen=True)
class SimplexSettings:
    variant: str = "primal"  # "primal" | "dual"
    max_pivots: int | None = None  # default 50 * (rows + cols) of the computational form
    pivot_tol: float = 1e-9
    opt_tol: float = 1e-9
    anti_cycling: str = "bland"  # "bland" | "lexicographic"
    degenerate_limit: int = 1000
    refactor_every: int = 50
    verbose: bool = False

    def __post_init__(self):
        if self.variant not in ("primal", "dual"):
            raise ValueError("variant must be 'primal' or 'dual'")
        if self.anti_cycling not in ("bland", "lexicographic"):
            raise ValueError("anti_cycling must be 'bland' or 'lexicographic'")
        if self.max_pivots is not None and self.max_pivots <= 0:
            raise ValueError("max_pivots must be positive")
        if not (self.pivot_tol > 0 and self.opt_tol > 0):
            raise ValueError("tolerances must be positive")


def dual_of(lp: LpProblem) -> LpProblem:
    """Dual of a standard-form LP (A z <= b, z >= 0, no equalities).

    ``max c^T z`` maps to ``min b^T w  s.t. -A^T w <= -c``; ``min c^T z`` maps
    to ``max -b^T w  s.t. -A^T w <= c``. Both keep w >= 0, so the map is an
    involution and the optimal values agree under strong duality.
    """
    if not lp.is_standard_primal():
        raise ValueError("dual_of expects a standard-form LP: inequalities only, all variables >= 0")
    m = lp.n_ineq
    if lp.sense == "max":
        cost, rhs, sense = lp.b_ub, -lp.cost, "min"
    else:
        cost, rhs, sense = -lp.b_ub, lp.cost, "max"
    return LpProblem(
        cost=cost, A_ub=-lp.A_ub.T, b_ub=rhs,
        A_eq=np.zeros((0, m)), b_eq=np.zeros(0),
        nonneg=np.ones(m, bool), sense=sense,
    )


class _Computational:
    """min c^T x, A x = b (b >= 0), x >= 0 built from an LpProblem.

    Column order: original columns (free ones as positive parts), negative parts
    of free columns, inequality slacks, artificials.
    """

    def __init__(self, lp: LpProblem):
        c0 = lp.min_form_cost()
        n0 = lp.n_vars
        free = np.flatnonzero(~lp.nonneg)
        m_ub, m_eq = lp.n_ineq, lp.n_eq
        m = m_ub + m_eq
        A_x = np.vstack([lp.A_ub, lp.A_eq]) if m else np.zeros((0, n0))
        A = np.hstack([A_x, -A_x[:, free], np.vstack([np.eye(m_ub), np.zeros((m_eq, m_ub))])])
        b = np.concatenate([lp.b_ub, lp.b_eq])
        flip = b < 0
        A[flip] *= -1.0
        b = np.where(flip, -b, b)
        # rows whose slack cannot start basic need an artificial
        needs_art = np.concatenate([flip[:m_ub], np.ones(m_eq, bool)])
        art_rows = np.flatnonzero(needs_art)
        art = np.zeros((m, art_rows.size))
        art[art_rows, np.arange(art_rows.size)] = 1.0
        self.A = np.hstack([A, art])
        self.b = b
        self.flip = flip
        self.n_struct = n0 + free.size + m_ub
        self.n_total = self.A.shape[1]
        self.c = np.concatenate([c0, -c0[free], np.zeros(m_ub + art_rows.size)])
        self.free = free
        self.n0 = n0
        self.m_ub = m_ub
        basis = np.empty(m, dtype=np.int64)
        slack0 = n0 + free.size
        basis[:m_ub] = slack0 + np.arange(m_ub)
        basis[art_rows] = self.n_struct + np.arange(art_rows.size)
        self.basis0 = basis
        self.n_art = art_rows.size

    def original_x(self, x):
        out = x[: self.n0].copy()
        out[self.free] -= x[self.n0:self.n0 + self.free.size]
        return out


def _run_phase(comp, AT, cost, basis, Binv, xB, allowed, settings, max_iter, logs):
    tag = logs is not None
    size = max_iter if (tag and settings.verbose) else 0
    le = np.full(size, -1, dtype=np.int64)
    ll = np.full(size, -1, dtype=np.int64)
    lo = np.full(size, np.nan)
    code, piv, Binv, xB = kernels.simplex_core(
        AT, comp.b, cost, basis, Binv, xB, allowed, max_iter,
        settings.opt_tol * (1.0 + np.abs(cost).max(initial=0.0)), settings.pivot_tol,
        settings.refactor_every, settings.degenerate_limit,
        kernels.BLAND if settings.anti_cycling == "bland" else kernels.LEXICOGRAPHIC,
        le, ll, lo,
    )
    if size:
        for k in range(min(piv, size)):
            logs.append({"pivot": len(logs) + 1, "entering": int(le[k]), "leaving": int(ll[k]),
                         "objective": float(lo[k])})
    return code, piv, Binv, xB


def _drive_out_artificials(comp, AT, basis, Binv, xB, pivot_tol):
    for r in range(basis.size):
        if basis[r] < comp.n_struct:
            continue
        row = Binv[r] @ comp.A[:, : comp.n_struct]
        nonbasic = np.ones(comp.n_struct, bool)
        nonbasic[basis[basis < comp.n_struct]] = False
        cand = np.flatnonzero(nonbasic & (np.abs(row) > pivot_tol))
        if cand.size == 0:
            continue  # redundant row: the artificial stays basic at zero
        q = cand[np.argmax(np.abs(row[cand]))]
        u = Binv @ AT[q]
        pr = Binv[r] / u[r]
        Binv -= np.outer(u, pr)
        Binv[r] = pr
        xB -= xB[r] / u[r] * u
        xB[r] = 0.0
        basis[r] = q
    return Binv, xB


def _primal_simplex(lp: LpProblem, settings: SimplexSettings, solver_id: SolverId):
    t0 = time.perf_counter()
    comp = _Computational(lp)
    m, n = comp.A.shape
    max_iter = settings.max_pivots or 50 * (m + n)
    AT = np.ascontiguousarray(comp.A.T)
    basis = comp.basis0.copy()
    Binv = np.eye(m)
    xB = comp.b.copy()
    log = [] if settings.verbose else None
    pivots = 0
    status = Status.OPTIMAL
    b_scale = 1.0 + np.abs(comp.b).max(initial=0.0)

    try:
        if comp.n_art:
            cost1 = np.zeros(n)
            cost1[comp.n_struct:] = 1.0
            allowed = np.ones(n, dtype=np.bool_)
            code, piv, Binv, xB = _run_phase(comp, AT, cost1, basis, Binv, xB, allowed,
                                             settings, max_iter, log)
            pivots += piv
            Binv, xB = kernels.refactor(AT, basis, comp.b)
            infeas = float(cost1[basis] @ xB)
            if code == kernels.MAX_ITERS:
                status = Status.MAX_ITERS
            elif infeas > 1e-9 * b_scale:
                status = Status.INFEASIBLE
            else:
                Binv, xB = _drive_out_artificials(comp, AT, basis, Binv, xB, settings.pivot_tol)
        if status is Status.OPTIMAL:
            allowed = np.zeros(n, dtype=np.bool_)
            allowed[: comp.n_struct] = True
            code, piv, Binv, xB = _run_phase(comp, AT, comp.c, basis, Binv, xB, allowed,
                                             settings, max(max_iter - pivots, 1), log)
            pivots += piv
            Binv, xB = kernels.refactor(AT, basis, comp.b)
            if code == kernels.UNBOUNDED:
                status = Status.UNBOUNDED
            elif code == kernels.MAX_ITERS:
                status = Status.MAX_ITERS
    except (np.linalg.LinAlgError, ZeroDivisionError, ValueError):
        status = Status.NUMERICAL_FAILURE

    xfull = np.zeros(n)
    if status is not Status.NUMERICAL_FAILURE:
        xfull[basis] = np.maximum(xB, 0.0)
    x = comp.original_x(xfull)

    report = SolverReport(status=status, solver_id=solver_id, iterations=pivots,
                          wall_time=0.0, objective=lp.objective(x), log=log or [])
    if status is Status.OPTIMAL:
        y = comp.c[basis] @ Binv
        y = np.where(comp.flip, -y, y)
        z_rows = -y
        report.ineq_duals = z_rows[: comp.m_ub]
        report.eq_duals = z_rows[comp.m_ub:]
        _fill_residuals(lp, x, report)
    report.wall_time = time.perf_counter() - t0
    return x, report


def _fill_residuals(lp: LpProblem, x, report: SolverReport):
    """Scaled primal/dual residuals and gap for a candidate primal-dual pair."""
    c = lp.min_form_cost()
    z_ub = report.ineq_duals if report.ineq_duals is not None else np.zeros(lp.n_ineq)
    z_eq = report.eq_duals if report.eq_duals is not None else np.zeros(lp.n_eq)
    red = c + lp.A_ub.T @ z_ub + lp.A_eq.T @ z_eq
    bound = np.where(lp.nonneg, red, 0.0)
    report.bound_duals = bound
    pres_ub = np.maximum(lp.A_ub @ x - lp.b_ub, 0.0).max(initial=0.0)
    pres_eq = np.abs(lp.A_eq @ x - lp.b_eq).max(initial=0.0)
    pres_nn = np.maximum(-x[lp.nonneg], 0.0).max(initial=0.0)
    rhs_scale = 1.0 + max(np.abs(lp.b_ub).max(initial=0.0), np.abs(lp.b_eq).max(initial=0.0))
    report.primal_residual = float(max(pres_ub, pres_eq, pres_nn) / rhs_scale)
    dres = max(np.abs(red[~lp.nonneg]).max(initial=0.0),
               np.maximum(-red[lp.nonneg], 0.0).max(initial=0.0),
               np.maximum(-z_ub, 0.0).max(initial=0.0))
    report.dual_residual = float(dres / (1.0 + np.abs(c).max(initial=0.0)))
    pobj = float(c @ x)
    dobj = -float(lp.b_ub @ z_ub + lp.b_eq @ z_eq)
    report.duality_gap = abs(pobj - dobj) / (1.0 + abs(pobj))


def solve_simplex(lp: LpProblem, s: SimplexSettings | None = None):
    """Solve ``lp`` and return ``(x, SolverReport)``; iterations count pivots."""
    settings = s or SimplexSettings()
    if settings.variant == "primal":
        return _primal_simplex(lp, settings, SolverId.PRIMAL_SIMPLEX)

    t0 = time.perf_counter()
    std = to_standard_primal(lp)
    dual = dual_of(std)
    w, drep = _primal_simplex(dual, settings, SolverId.DUAL_SIMPLEX)
    status = drep.status
    if status is Status.UNBOUNDED:
        status = Status.INFEASIBLE
    elif status is Status.INFEASIBLE:
        status = Status.UNBOUNDED  # primal infeasible-and-unbounded is not distinguished here
    if drep.ok:
        # primal values are the multipliers of the dual rows, i.e. the reduced
        # costs of the dual slack columns
        z = np.maximum(drep.ineq_duals, 0.0)
    else:
        z = np.zeros(std.n_vars)
    x = from_standard_primal(lp, z)
    report = SolverReport(status=status, solver_id=SolverId.DUAL_SIMPLEX,
                          iterations=drep.iterations, objective=lp.objective(x), log=drep.log)
    if drep.ok:
        m_ub, m_eq = lp.n_ineq, lp.n_eq
        report.ineq_duals = w[:m_ub].copy()
        report.eq_duals = w[m_ub:m_ub + m_eq] - w[m_ub + m_eq:m_ub + 2 * m_eq]
        _fill_residuals(lp, x, report)
    report.wall_time = time.perf_counter() - t0
    return x, report
