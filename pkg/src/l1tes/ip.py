"""Mehrotra predictor-corrector interior-point method.

The problem is handled in inequality form::

    min c^T x   s.t.  G x + s = h,  A x = b,  s >= 0

with x free; sign constraints become rows of G. Newton systems are reduced to
the n x n normal matrix G^T (Z/S) G, factorised densely by Cholesky, and the
(usually tiny) equality block is eliminated through its Schur complement.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .problem import LpProblem, SolverId, SolverReport, Status


@dataclass(frozen=True)
class IpSettings:
    tol_gap: float = 1e-8
    tol_feas: float = 1e-8
    max_iters: int = 100
    step_fraction: float = 0.99
    regularization: float = 1e-10
    verbose: bool = False

    def __post_init__(self):
        if not (self.tol_gap > 0 and self.tol_feas > 0 and self.max_iters > 0):
            raise ValueError("IP tolerances and max_iters must be positive")
        if not 0.0 < self.step_fraction < 1.0:
            raise ValueError("step_fraction must lie in (0, 1)")


class _NormalSolver:
    """Factorised G^T D G (+ equality Schur complement) for repeated solves."""

    def __init__(self, G, d, A, reg):
        if sp.issparse(G):
            H = (G.T @ sp.diags(d) @ G).toarray()
        else:
            H = (G.T * d) @ G
        self.factor = self._cholesky(H, reg)
        self.A = A
        if A.shape[0]:
            self.HiAt = sla.cho_solve(self.factor, A.T)
            self.schur = self._cholesky(A @ self.HiAt, reg)

    @staticmethod
    def _cholesky(H, reg):
        try:
            return sla.cho_factor(H, lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            pass
        shift = reg * (1.0 + np.max(np.abs(np.diag(H)), initial=0.0))
        H = H + shift * np.eye(H.shape[0])
        return sla.cho_factor(H, lower=True, check_finite=False)

    def solve(self, r1, re):
        """Solve H dx + A^T dl = r1, A dx = -re."""
        u = sla.cho_solve(self.factor, r1, check_finite=False)
        if not self.A.shape[0]:
            return u, np.zeros(0)
        dl = sla.cho_solve(self.schur, self.A @ u + re, check_finite=False)
        return u - self.HiAt @ dl, dl


def _inequality_form(lp: LpProblem):
    n = lp.n_vars
    idx = np.flatnonzero(lp.nonneg)
    bound_rows = np.zeros((idx.size, n))
    bound_rows[np.arange(idx.size), idx] = -1.0
    G = np.vstack([lp.A_ub, bound_rows])
    h = np.concatenate([lp.b_ub, np.zeros(idx.size)])
    return G, h, idx


def _max_step(v, dv):
    neg = dv < 0
    if not np.any(neg):
        return np.inf
    return float(np.min(-v[neg] / dv[neg]))


def _starting_point(G, Gop, h, A, b, c, reg):
    n = G.shape[1]
    solver = _NormalSolver(Gop, np.ones(G.shape[0]), A, reg)
    x, _ = solver.solve(Gop.T @ h, -b)
    s = h - Gop @ x
    u, _ = solver.solve(-c, np.zeros(A.shape[0]))
    z = Gop @ u
    ds = max(-1.5 * s.min(), 0.0)
    dz = max(-1.5 * z.min(), 0.0)
    s = s + ds
    z = z + dz
    sz = float(s @ z)
    if sz <= 0.0 or s.sum() <= 0.0 or z.sum() <= 0.0:
        scale = max(1.0, float(np.abs(h).max(initial=0.0)))
        return x, np.full(G.shape[0], scale), np.ones(G.shape[0])
    s = s + 0.5 * sz / z.sum()
    z = z + 0.5 * sz / s.sum()
    return x, s, z


def solve_ip(lp: LpProblem, s: IpSettings | None = None):
    """Solve ``lp`` and return ``(x, SolverReport)``.

    Residuals in the report are scaled: primal by (1 + ||rhs||_inf), dual by
    (1 + ||c||_inf), and the complementarity gap s^T z by (1 + |c^T x|).
    """
    settings = s or IpSettings()
    t0 = time.perf_counter()
    c = lp.min_form_cost().astype(float)
    G, h, bound_idx = _inequality_form(lp)
    A, b = lp.A_eq, lp.b_eq
    m, n = G.shape
    if m == 0:
        raise ValueError("interior-point solver needs at least one inequality or sign constraint")
    Gop = sp.csr_matrix(G) if np.count_nonzero(G) < 0.25 * G.size else G
    h_scale = 1.0 + np.abs(h).max(initial=0.0)
    b_scale = 1.0 + np.abs(b).max(initial=0.0)
    c_scale = 1.0 + np.abs(c).max(initial=0.0)
    eta = settings.step_fraction

    log = []
    status = Status.MAX_ITERS
    try:
        x, sl, z = _starting_point(G, Gop, h, A, b, c, settings.regularization)
    except np.linalg.LinAlgError:
        x, sl, z = np.zeros(n), np.ones(m), np.ones(m)
    lam = np.zeros(A.shape[0])

    it = 0
    pres = dres = gap = np.inf
    while True:
        rp = Gop @ x + sl - h
        re = A @ x - b
        rd = c + Gop.T @ z + A.T @ lam
        mu = float(sl @ z) / m
        pobj = float(c @ x)
        pres = max(np.abs(rp).max() / h_scale, np.abs(re).max(initial=0.0) / b_scale)
        dres = np.abs(rd).max(initial=0.0) / c_scale
        gap = float(sl @ z) / (1.0 + abs(pobj))
        if pres <= settings.tol_feas and dres <= settings.tol_feas and gap <= settings.tol_gap:
            status = Status.OPTIMAL
            break
        if it >= settings.max_iters:
            break
        if not (np.all(np.isfinite(x)) and np.isfinite(mu)):
            status = Status.NUMERICAL_FAILURE
            break
        d = z / sl
        try:
            ns = _NormalSolver(Gop, d, A, settings.regularization)
        except (np.linalg.LinAlgError, ValueError):
            status = Status.NUMERICAL_FAILURE
            break

        @np.errstate(over="ignore", invalid="ignore", divide="ignore")  # non-finite steps are caught below
        def direction(rc):
            r1 = -rd - Gop.T @ (d * rp - rc / sl)
            dx, dl = ns.solve(r1, re)
            for _ in range(6):  # iterative refinement against the unformed operator
                e1 = r1 - Gop.T @ (d * (Gop @ dx)) - A.T @ dl
                e2 = A @ dx + re
                if np.abs(e1).max(initial=0.0) <= 1e-14 * (1.0 + np.abs(r1).max(initial=0.0)):
                    break
                cx, cl = ns.solve(e1, e2)
                dx, dl = dx + cx, dl + cl
            dz = d * (Gop @ dx + rp) - rc / sl
            ds = -(rc + sl * dz) / z
            return dx, ds, dz, dl

        dx_a, ds_a, dz_a, _ = direction(sl * z)
        ap = min(1.0, _max_step(sl, ds_a))
        ad = min(1.0, _max_step(z, dz_a))
        mu_aff = float((sl + ap * ds_a) @ (z + ad * dz_a)) / m
        sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0
        if gap <= 0.1 * settings.tol_gap:
            # complementarity is done; pushing mu further only ruins the
            # conditioning, so re-centre and let the step fix the residuals
            sigma = 1.0
        dx, ds, dz, dl = direction(sl * z + ds_a * dz_a - sigma * mu)
        ap = min(1.0, eta * _max_step(sl, ds))
        ad = min(1.0, eta * _max_step(z, dz))
        if not (np.all(np.isfinite(dx)) and np.all(np.isfinite(dz))):
            status = Status.NUMERICAL_FAILURE
            break
        x = x + ap * dx
        sl = sl + ap * ds
        z = z + ad * dz
        lam = lam + ad * dl
        it += 1
        log.append({
            "iteration": it, "gap": gap, "primal_residual": pres, "dual_residual": dres,
            "mu": mu, "sigma": sigma, "step_primal": ap, "step_dual": ad,
        })

    m_ub = lp.n_ineq
    bound_duals = np.zeros(n)
    bound_duals[bound_idx] = z[m_ub:]
    report = SolverReport(
        status=status, solver_id=SolverId.IP, iterations=it,
        primal_residual=float(pres), dual_residual=float(dres), duality_gap=float(gap),
        wall_time=time.perf_counter() - t0, objective=lp.objective(x),
        ineq_duals=z[:m_ub].copy(), eq_duals=lam.copy(), bound_duals=bound_duals, log=log,
    )
    return x, report
