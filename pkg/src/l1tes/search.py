"""Two-stage (alpha, epsilon) lattice search and the Taylor deviation whisker.

Every lattice point is an independent LP. :func:`run_lattice` accepts any
executor with an order-preserving ``map``; results are merged by lattice index
and all reductions happen afterwards, so the outcome does not depend on the
schedule.
"""
from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from .assembler import L1L1Params, assemble_l1l1
from .ip import IpSettings, solve_ip
from .leadfield import SplitLeadField
from .metrics import CurrentPattern, PatternMetrics, pattern_metrics
from .oracle import solve_exact
from .problem import SolverReport
from .simplex import SimplexSettings, solve_simplex

SOLVERS = ("ip", "primal", "dual", "oracle")
# The dose rows of the L1-L1 LP live at the milliampere scale while the fit rows
# are O(1), so lattice solves ask the IP for two more digits than its default.
LATTICE_IP = IpSettings(tol_gap=1e-10, tol_feas=1e-10)
GAMMA0_FRACTION = 0.75


class SearchError(RuntimeError):
    pass


def solve_lp(lp, solver: str):
    """Dispatch on a solver name from :data:`SOLVERS`."""
    if solver == "ip":
        return solve_ip(lp, LATTICE_IP)
    if solver == "primal":
        return solve_simplex(lp, SimplexSettings(variant="primal"))
    if solver == "dual":
        return solve_simplex(lp, SimplexSettings(variant="dual"))
    if solver == "oracle":
        return solve_exact(lp)
    raise ValueError(f"unknown solver {solver!r}; choose from {SOLVERS}")


@dataclass(frozen=True)
class LatticeSpec:
    alpha_db_range: tuple = (-100.0, -20.0)
    epsilon_db_range: tuple = (-160.0, 0.0)
    resolution: tuple = (15, 15)
    db_convention: str = "amplitude"  # value = 10**(dB/20); "power" uses 10**(dB/10)

    def __post_init__(self):
        for name in ("alpha_db_range", "epsilon_db_range", "resolution"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.db_convention not in ("amplitude", "power"):
            raise ValueError("db_convention must be 'amplitude' or 'power'")
        for (lo, hi), n in zip((self.alpha_db_range, self.epsilon_db_range), self.resolution):
            if int(n) != n or n < 1:
                raise ValueError("resolution entries must be positive integers")
            if not lo < hi:
                raise ValueError("dB ranges need low < high")
        if self.epsilon_db_range[1] > 0:
            raise ValueError("epsilon must stay <= 1, so the epsilon range must end at <= 0 dB")

    @property
    def shape(self) -> tuple:
        return int(self.resolution[0]), int(self.resolution[1])

    def _axis(self, rng, n):
        # a single-point axis sits at the low end of its range
        return np.array([float(rng[0])]) if n == 1 else np.linspace(rng[0], rng[1], n)

    @property
    def alpha_db(self) -> np.ndarray:
        return self._axis(self.alpha_db_range, self.shape[0])

    @property
    def epsilon_db(self) -> np.ndarray:
        return self._axis(self.epsilon_db_range, self.shape[1])

    def from_db(self, db):
        div = 20.0 if self.db_convention == "amplitude" else 10.0
        return 10.0 ** (np.asarray(db, dtype=float) / div)


@dataclass
class LatticePoint:
    index: tuple
    alpha_db: float
    epsilon_db: float
    alpha: float
    epsilon: float
    pattern: CurrentPattern | None
    metrics: PatternMetrics
    report: SolverReport


@dataclass
class LatticeResult:
    spec: LatticeSpec
    solver: str
    points: list  # row-major over (alpha, epsilon)
    electrodes: tuple
    argmax_gamma: tuple | None
    argmax_theta_constrained: tuple | None
    gamma0: float
    wall_time: float = 0.0

    def grid(self, name: str) -> np.ndarray:
        """Metric grid of shape (n_alpha, n_epsilon); NaN where the solve failed."""
        out = np.full(self.spec.shape, np.nan)
        for p in self.points:
            if p.metrics.valid:
                out[p.index] = {"gamma": p.metrics.gamma_intensity,
                                "theta": p.metrics.theta_focality,
                                "nnz": p.metrics.nnz,
                                "max_current": p.metrics.max_current}[name]
        return out

    def point(self, idx) -> LatticePoint:
        return self.points[idx[0] * self.spec.shape[1] + idx[1]]

    @property
    def gamma_max(self) -> float:
        return self.point(self.argmax_gamma).metrics.gamma_intensity if self.argmax_gamma else math.nan

    @property
    def theta_max(self) -> float:
        idx = self.argmax_theta_constrained
        return self.point(idx).metrics.theta_focality if idx else math.nan

    @property
    def n_failed(self) -> int:
        return sum(not p.metrics.valid for p in self.points)

    @property
    def solve_time(self) -> float:
        return float(sum(p.report.wall_time for p in self.points))

    def full_pattern(self, idx, n_electrodes: int) -> np.ndarray:
        """Pattern at ``idx`` scattered back onto all ``n_electrodes`` electrodes."""
        y = np.zeros(n_electrodes)
        y[list(self.electrodes)] = self.point(idx).pattern.currents
        return y


def evaluate_point(slf: SplitLeadField, solver: str, mu: float, gamma_cap: float, item):
    """Solve one lattice point; failures come back with invalid metrics."""
    index, alpha_db, eps_db, alpha, eps = item
    lp = assemble_l1l1(slf, L1L1Params(alpha=alpha, epsilon=eps, gamma=gamma_cap, mu=mu))
    x, rep = solve_lp(lp, solver)
    rep.log = []
    if rep.ok:
        y = lp.block(x, "y")
        pattern, metrics = CurrentPattern(y), pattern_metrics(slf, y)
    else:
        pattern, metrics = None, PatternMetrics.invalid()
    return LatticePoint(index, alpha_db, eps_db, alpha, eps, pattern, metrics, rep)


def _reduce(points, shape):
    gam = np.full(shape, np.nan)
    the = np.full(shape, np.nan)
    for p in points:
        if p.metrics.valid:
            gam[p.index] = p.metrics.gamma_intensity
            the[p.index] = p.metrics.theta_focality
    if np.all(np.isnan(gam)):
        return None, None, math.nan
    flat = int(np.nanargmax(gam))  # first maximum in row-major order
    ig = np.unravel_index(flat, shape)
    gamma0 = GAMMA0_FRACTION * gam[ig]
    ok = ~np.isnan(gam) & (gam >= gamma0)
    masked = np.where(ok, the, -np.inf)
    it = np.unravel_index(int(np.argmax(masked)), shape)
    return (int(ig[0]), int(ig[1])), (int(it[0]), int(it[1])), float(gamma0)


def run_lattice(slf: SplitLeadField, spec: LatticeSpec, solver: str = "ip",
                mu: float = 4e-3, gamma_cap: float | None = None, executor=None) -> LatticeResult:
    if solver not in SOLVERS:
        raise ValueError(f"unknown solver {solver!r}")
    gamma_cap = mu / 2 if gamma_cap is None else gamma_cap
    a_db, e_db = spec.alpha_db, spec.epsilon_db
    a_val, e_val = spec.from_db(a_db), spec.from_db(e_db)
    items = [((i, j), float(a_db[i]), float(e_db[j]), float(a_val[i]), float(e_val[j]))
             for i in range(a_db.size) for j in range(e_db.size)]
    work = partial(evaluate_point, slf, solver, mu, gamma_cap)
    t0 = time.perf_counter()
    if executor is None:
        results = [work(it) for it in items]
    else:
        results = list(executor.map(work, items, chunksize=max(1, len(items) // 32)))
    wall = time.perf_counter() - t0
    by_index = {p.index: p for p in results}
    points = [by_index[it[0]] for it in items]
    ig, it_, g0 = _reduce(points, spec.shape)
    electrodes = slf.electrodes if slf.electrodes is not None else tuple(range(slf.n_electrodes))
    return LatticeResult(spec, solver, points, tuple(electrodes), ig, it_, g0, wall)


def default_montage_size(n_electrodes: int) -> int:
    if n_electrodes == 128:
        return 20
    return max(2, min(n_electrodes, math.ceil(0.16 * n_electrodes)))


@dataclass
class TwoStageResult:
    stage1: LatticeResult
    stage2_gamma: LatticeResult
    stage2_theta: LatticeResult
    montage_gamma: tuple
    montage_theta: tuple
    timings: dict = field(default_factory=dict)


def montage_from(result: LatticeResult, idx, size: int) -> tuple:
    """The ``size`` electrodes with largest |current| at ``idx``, in ascending order."""
    y = result.point(idx).pattern.currents
    top = np.argsort(-np.abs(y), kind="stable")[:size]
    return tuple(int(result.electrodes[k]) for k in np.sort(top))


def run_two_stage(slf: SplitLeadField, spec: LatticeSpec, solver: str = "ip",
                  mu: float = 4e-3, gamma_cap: float | None = None,
                  montage_size: int | None = None, executor=None) -> TwoStageResult:
    """Full-montage lattice, then one restricted lattice per meta-task.

    The Gamma task keeps the electrodes driven hardest at the stage-1 Gamma
    argmax, the Theta task those at the constrained Theta argmax.
    """
    L = slf.n_electrodes
    size = default_montage_size(L) if montage_size is None else int(montage_size)
    if not 2 <= size <= L:
        raise ValueError(f"montage_size must lie in [2, {L}], got {size}")
    s1 = run_lattice(slf, spec, solver, mu, gamma_cap, executor)
    if s1.argmax_gamma is None:
        raise SearchError(f"every stage-1 lattice point failed for solver {solver}")
    mg = montage_from(s1, s1.argmax_gamma, size)
    mt = montage_from(s1, s1.argmax_theta_constrained, size)
    s2g = run_lattice(slf.restrict(mg), spec, solver, mu, gamma_cap, executor)
    s2t = s2g if mt == mg else run_lattice(slf.restrict(mt), spec, solver, mu, gamma_cap, executor)
    timings = {"stage1": s1.wall_time,
               "stage2": s2g.wall_time + (0.0 if s2t is s2g else s2t.wall_time)}
    return TwoStageResult(s1, s2g, s2t, mg, mt, timings)


# --- deviation whisker -------------------------------------------------------

@dataclass(frozen=True)
class Whisker:
    max_deviation: float


def _axis_derivs(v, i, n):
    """First and second difference of ``v(.)`` at ``i`` (one-sided at the ends)."""
    if 0 < i < n - 1:
        return (v(i + 1) - v(i - 1)) / 2.0, v(i + 1) - 2.0 * v(i) + v(i - 1)
    if i == 0:
        return (-3.0 * v(0) + 4.0 * v(1) - v(2)) / 2.0, v(0) - 2.0 * v(1) + v(2)
    return (3.0 * v(i) - 4.0 * v(i - 1) + v(i - 2)) / 2.0, v(i) - 2.0 * v(i - 1) + v(i - 2)


def taylor_whisker(values, idx, spec: LatticeSpec | None = None) -> Whisker:
    """Largest second-order Taylor change within half a lattice step of ``idx``.

    Steps are measured in lattice units, so the estimate reflects the lattice
    density. The quadratic model is evaluated at the four corners and four edge
    midpoints of the box |delta|_inf <= 1/2, plus its stationary point when that
    lies inside the box. Returns NaN when the stencil touches a failed point.
    """
    V = np.asarray(values, dtype=float)
    if V.ndim != 2 or V.shape[0] < 3 or V.shape[1] < 3:
        raise ValueError("whisker needs a lattice of at least 3 x 3")
    if spec is not None and tuple(spec.shape) != V.shape:
        raise ValueError("values do not match the lattice shape")
    i, j = int(idx[0]), int(idx[1])
    na, ne = V.shape
    gi, hii = _axis_derivs(lambda k: V[k, j], i, na)
    gj, hjj = _axis_derivs(lambda k: V[i, k], j, ne)
    ip, im = (i + 1, i - 1) if 0 < i < na - 1 else ((i + 1, i) if i == 0 else (i, i - 1))
    jp, jm = (j + 1, j - 1) if 0 < j < ne - 1 else ((j + 1, j) if j == 0 else (j, j - 1))
    hij = (V[ip, jp] - V[ip, jm] - V[im, jp] + V[im, jm]) / ((ip - im) * (jp - jm))
    g = np.array([gi, gj])
    H = np.array([[hii, hij], [hij, hjj]])
    if not (np.all(np.isfinite(g)) and np.all(np.isfinite(H))):
        return Whisker(math.nan)

    cands = [np.array(d) for d in ((.5, .5), (.5, -.5), (-.5, .5), (-.5, -.5),
                                   (.5, 0.), (-.5, 0.), (0., .5), (0., -.5))]
    if abs(np.linalg.det(H)) > 1e-14 * (1.0 + np.abs(H).max()):
        d = -np.linalg.solve(H, g)
        if np.abs(d).max() <= 0.5:
            cands.append(d)
    dev = max(abs(float(g @ d + 0.5 * d @ H @ d)) for d in cands)
    return Whisker(dev)


# --- export ------------------------------------------------------------------

LATTICE_COLUMNS = ("alpha_db", "epsilon_db", "gamma", "theta", "nnz", "max_current",
                   "solver_status", "iterations")


def lattice_csv(result: LatticeResult, header: str | None = None) -> str:
    """Lattice map as CSV text; floats are written with ``repr`` so they round-trip.

    Wall time is deliberately left out so that identical runs give identical
    files; timings live in the run summary instead.
    """
    buf = io.StringIO()
    if header:
        buf.write(f"# {header}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LATTICE_COLUMNS)
    for p in result.points:
        m = p.metrics
        w.writerow([repr(p.alpha_db), repr(p.epsilon_db), repr(m.gamma_intensity),
                    repr(m.theta_focality), m.nnz, repr(m.max_current),
                    p.report.status.value, p.report.iterations])
    return buf.getvalue()
