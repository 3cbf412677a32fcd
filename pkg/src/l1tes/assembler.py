"""L1-L1 linear program: assembly, standard-form conversion, and the direct objective."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .leadfield import SplitLeadField
from .problem import LpProblem


@dataclass(frozen=True)
class L1L1Params:
    alpha: float
    epsilon: float
    gamma: float = 2e-3
    mu: float = 4e-3

    def __post_init__(self):
        vals = (self.alpha, self.epsilon, self.gamma, self.mu)
        if not all(np.isfinite(v) for v in vals):
            raise ValueError("L1-L1 parameters must be finite")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        if not 0.0 < self.gamma <= self.mu:
            raise ValueError("need 0 < gamma <= mu")


def zeta(slf: SplitLeadField) -> float:
    """Induced 1-norm (max column absolute sum) of the stacked lead field."""
    return float(np.abs(slf.stacked).sum(axis=0).max())


def nu(slf: SplitLeadField) -> float:
    return float(np.linalg.norm(slf.x1))


def assemble_l1l1(slf: SplitLeadField, p: L1L1Params) -> LpProblem:
    """Epigraph LP over (y, t1, t2, t3).

    Eleven inequality blocks::

        L1 y - t1 <= x1         -L1 y - t1 <= -x1
        L2 y - t2 <= 0          -L2 y - t2 <= 0
        -y - t3   <= 0           y - t3    <= 0
        -t1 <= 0   -t2 <= -eps*nu   -t3 <= 0   t3 <= gamma   1^T t3 <= mu

    plus ``1^T y = 0``. Cost is 1 on t1 and t2 and alpha*zeta on t3.
    """
    L1, L2, x1 = slf.l1, slf.l2, slf.x1
    for arr in (L1, L2, x1):
        if not np.all(np.isfinite(arr)):
            raise ValueError("split lead field contains NaN or Inf")
    K, L = L1.shape
    M = L2.shape[0]
    n = L + K + M + L
    iy, i1, i2, i3 = 0, L, L + K, L + K + M

    I_K, I_M, I_L = np.eye(K), np.eye(M), np.eye(L)
    Z = np.zeros

    def row(y=None, t1=None, t2=None, t3=None, height=None):
        blocks = [
            y if y is not None else Z((height, L)),
            t1 if t1 is not None else Z((height, K)),
            t2 if t2 is not None else Z((height, M)),
            t3 if t3 is not None else Z((height, L)),
        ]
        return np.hstack(blocks)

    A_ub = np.vstack([
        row(y=L1, t1=-I_K, height=K),
        row(y=L2, t2=-I_M, height=M),
        row(y=-I_L, t3=-I_L, height=L),
        row(y=-L1, t1=-I_K, height=K),
        row(y=-L2, t2=-I_M, height=M),
        row(y=I_L, t3=-I_L, height=L),
        row(t1=-I_K, height=K),
        row(t2=-I_M, height=M),
        row(t3=-I_L, height=L),
        row(t3=I_L, height=L),
        row(t3=np.ones((1, L)), height=1),
    ])
    eps_nu = p.epsilon * nu(slf)
    b_ub = np.concatenate([
        x1, Z(M), Z(L), -x1, Z(M), Z(L), Z(K), np.full(M, -eps_nu), Z(L),
        np.full(L, p.gamma), [p.mu],
    ])
    cost = np.concatenate([Z(L), np.ones(K), np.ones(M), np.full(L, p.alpha * zeta(slf))])
    nonneg = np.concatenate([np.zeros(L, bool), np.ones(K + M + L, bool)])
    return LpProblem(
        cost=cost, A_ub=A_ub, b_ub=b_ub,
        A_eq=np.concatenate([np.ones(L), Z(K + M + L)])[None, :], b_eq=np.zeros(1),
        nonneg=nonneg,
        blocks={"y": (iy, i1), "t1": (i1, i2), "t2": (i2, i3), "t3": (i3, n)},
    )


def to_standard_primal(lp: LpProblem) -> LpProblem:
    """Rewrite as ``sense`` c^T z s.t. A z <= b, z >= 0.

    Free variables become differences of two nonnegative ones; the negative
    parts are appended after the original columns, in index order. Each
    equality becomes a pair of opposing inequalities appended after the
    original inequality rows. Use :func:`from_standard_primal` to map a
    solution back.
    """
    free = np.flatnonzero(~lp.nonneg)
    if free.size == 0 and lp.n_eq == 0:
        return lp
    A_ub = np.hstack([lp.A_ub, -lp.A_ub[:, free]])
    A_eq = np.hstack([lp.A_eq, -lp.A_eq[:, free]])
    cost = np.concatenate([lp.cost, -lp.cost[free]])
    return LpProblem(
        cost=cost,
        A_ub=np.vstack([A_ub, A_eq, -A_eq]),
        b_ub=np.concatenate([lp.b_ub, lp.b_eq, -lp.b_eq]),
        A_eq=np.zeros((0, cost.size)), b_eq=np.zeros(0),
        nonneg=np.ones(cost.size, bool), sense=lp.sense,
        blocks=dict(lp.blocks),
    )


def from_standard_primal(lp: LpProblem, z) -> np.ndarray:
    """Original-variable point from a solution of ``to_standard_primal(lp)``."""
    z = np.asarray(z, dtype=float)
    free = np.flatnonzero(~lp.nonneg)
    x = z[: lp.n_vars].copy()
    x[free] -= z[lp.n_vars:lp.n_vars + free.size]
    return x


def objective_value(slf: SplitLeadField, p: L1L1Params, y) -> float:
    """Direct evaluation of the L1-L1 objective for a current pattern.

    The thresholded nuisance term is reported in field units, i.e.
    ``sum_m max(|L2 y|_m, eps * nu)``, which is what the epigraph LP charges.
    """
    y = np.asarray(y, dtype=float).ravel()
    if y.size != slf.n_electrodes:
        raise ValueError(f"pattern has {y.size} entries, expected {slf.n_electrodes}")
    v = nu(slf)
    fit = np.abs(slf.l1 @ y - slf.x1).sum()
    if v > 0:
        nuisance = v * np.maximum(np.abs(slf.l2 @ y) / v, p.epsilon).sum()
    else:
        nuisance = np.abs(slf.l2 @ y).sum()
    return float(fit + nuisance + p.alpha * zeta(slf) * np.abs(y).sum())


def minimal_epigraph(slf: SplitLeadField, p: L1L1Params, y) -> np.ndarray:
    """LP point (y, t1, t2, t3) with the smallest slack variables for pattern ``y``."""
    y = np.asarray(y, dtype=float).ravel()
    t1 = np.abs(slf.l1 @ y - slf.x1)
    t2 = np.maximum(np.abs(slf.l2 @ y), p.epsilon * nu(slf))
    t3 = np.abs(y)
    return np.concatenate([y, t1, t2, t3])
