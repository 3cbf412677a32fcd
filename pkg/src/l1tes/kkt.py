"""Solver-independent KKT certificate for a primal-dual pair.

Uses the multiplier convention of :class:`l1tes.problem.SolverReport`::

    c + A_ub^T z_ub + A_eq^T z_eq - z_bound = 0,   z_ub >= 0,  z_bound >= 0

where ``c`` is the minimisation form of the cost and ``z_bound`` lives only on
sign-constrained variables.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problem import LpProblem, SolverReport


@dataclass(frozen=True)
class KktResult:
    primal_infeasibility: float
    dual_infeasibility: float
    stationarity: float
    complementarity: float
    tol: float

    @property
    def passed(self) -> bool:
        worst = max(self.primal_infeasibility, self.dual_infeasibility,
                    self.stationarity, self.complementarity)
        return bool(np.isfinite(worst) and worst <= self.tol)


def check_kkt(lp: LpProblem, x, z_ub, z_eq, z_bound=None, tol: float = 1e-7) -> KktResult:
    """Scaled KKT violations; every figure is relative to the data magnitude.

    Without ``z_bound`` the bound multipliers are taken as the reduced costs,
    so only their sign is then tested.
    """
    x = np.asarray(x, dtype=float)
    c = lp.min_form_cost()
    z_ub = np.zeros(lp.n_ineq) if z_ub is None else np.asarray(z_ub, dtype=float)
    z_eq = np.zeros(lp.n_eq) if z_eq is None else np.asarray(z_eq, dtype=float)
    red = c + lp.A_ub.T @ z_ub + lp.A_eq.T @ z_eq
    if z_bound is None:
        z_bound = np.where(lp.nonneg, red, 0.0)
    z_bound = np.asarray(z_bound, dtype=float)

    b_scale = 1.0 + max(np.abs(lp.b_ub).max(initial=0.0), np.abs(lp.b_eq).max(initial=0.0))
    c_scale = 1.0 + np.abs(c).max(initial=0.0)
    slack = lp.b_ub - lp.A_ub @ x
    primal = max(
        np.maximum(-slack, 0.0).max(initial=0.0),
        np.abs(lp.A_eq @ x - lp.b_eq).max(initial=0.0),
        np.maximum(-x[lp.nonneg], 0.0).max(initial=0.0),
    ) / b_scale

    free_bound = np.abs(z_bound[~lp.nonneg]).max(initial=0.0)
    dual = max(
        np.maximum(-z_ub, 0.0).max(initial=0.0),
        np.maximum(-z_bound[lp.nonneg], 0.0).max(initial=0.0),
        free_bound,
    ) / c_scale
    stat = np.abs(red - z_bound).max(initial=0.0) / c_scale

    xb = np.where(lp.nonneg, x, 0.0)
    comp = (np.abs(z_ub * slack).sum() + np.abs(z_bound * xb).sum()) / (1.0 + abs(float(c @ x)))
    return KktResult(float(primal), float(dual), float(stat), float(comp), tol)


def certify(lp: LpProblem, x, report: SolverReport, tol: float = 1e-7) -> KktResult:
    """Check the primal point and the multipliers carried by ``report``."""
    if report.ineq_duals is None:
        raise ValueError("report carries no dual information")
    return check_kkt(lp, x, report.ineq_duals, report.eq_duals, report.bound_duals, tol)
