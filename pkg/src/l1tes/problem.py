"""Linear program container, solver report, and a plain-text interchange format."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np


class Status(str, Enum):
    OPTIMAL = "Optimal"
    MAX_ITERS = "MaxIters"
    NUMERICAL_FAILURE = "NumericalFailure"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


class SolverId(str, Enum):
    IP = "IP"
    PRIMAL_SIMPLEX = "PrimalSimplex"
    DUAL_SIMPLEX = "DualSimplex"
    ORACLE = "Oracle"


@dataclass
class SolverReport:
    status: Status
    solver_id: SolverId
    iterations: int = 0
    primal_residual: float = 0.0
    dual_residual: float = 0.0
    duality_gap: float = 0.0
    wall_time: float = 0.0
    objective: float = float("nan")
    # multipliers of the LpProblem that was solved, with c its min-form cost:
    # c + A_ub^T z_ub + A_eq^T z_eq - z_bound = 0, z_ub >= 0, z_bound >= 0
    ineq_duals: np.ndarray | None = None
    eq_duals: np.ndarray | None = None
    bound_duals: np.ndarray | None = None
    log: list = field(default_factory=list, repr=False)

    @property
    def ok(self) -> bool:
        return self.status is Status.OPTIMAL


def _as_matrix(a, ncols: int) -> np.ndarray:
    if a is None:
        return np.zeros((0, ncols))
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a.reshape(-1, ncols) if a.size else np.zeros((0, ncols))
    return a


@dataclass(frozen=True, eq=False)
class LpProblem:
    """``sense`` c^T x subject to A_ub x <= b_ub, A_eq x = b_eq, x_i >= 0 where ``nonneg[i]``.

    ``blocks`` optionally names contiguous column ranges (e.g. ``{"y": (0, L)}``)
    so that callers can pull structured pieces back out of a solution.
    """

    cost: np.ndarray
    A_ub: np.ndarray
    b_ub: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    nonneg: np.ndarray
    sense: str = "min"
    blocks: dict = field(default_factory=dict)

    def __post_init__(self):
        c = np.asarray(self.cost, dtype=float).ravel()
        n = c.size
        A_ub = _as_matrix(self.A_ub, n)
        A_eq = _as_matrix(self.A_eq, n)
        b_ub = np.asarray(self.b_ub if self.b_ub is not None else [], dtype=float).ravel()
        b_eq = np.asarray(self.b_eq if self.b_eq is not None else [], dtype=float).ravel()
        nonneg = np.asarray(self.nonneg, dtype=bool).ravel()
        if self.sense not in ("min", "max"):
            raise ValueError(f"sense must be 'min' or 'max', got {self.sense!r}")
        if A_ub.shape != (b_ub.size, n) or A_eq.shape != (b_eq.size, n):
            raise ValueError(
                f"inconsistent LP dimensions: n={n}, A_ub {A_ub.shape}, b_ub {b_ub.shape}, "
                f"A_eq {A_eq.shape}, b_eq {b_eq.shape}"
            )
        if nonneg.size != n:
            raise ValueError(f"nonneg mask has length {nonneg.size}, expected {n}")
        for name, arr in (("cost", c), ("A_ub", A_ub), ("b_ub", b_ub), ("A_eq", A_eq), ("b_eq", b_eq)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains NaN or Inf")
        for name, arr in (("cost", c), ("A_ub", A_ub), ("b_ub", b_ub), ("A_eq", A_eq), ("b_eq", b_eq), ("nonneg", nonneg)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_vars(self) -> int:
        return self.cost.size

    @property
    def n_ineq(self) -> int:
        return self.b_ub.size

    @property
    def n_eq(self) -> int:
        return self.b_eq.size

    def objective(self, x) -> float:
        return float(self.cost @ np.asarray(x, dtype=float))

    def min_form_cost(self) -> np.ndarray:
        """Cost vector of the equivalent minimisation."""
        return self.cost if self.sense == "min" else -self.cost

    def is_standard_primal(self) -> bool:
        return self.n_eq == 0 and bool(self.nonneg.all())

    def block(self, x, name: str) -> np.ndarray:
        lo, hi = self.blocks[name]
        return np.asarray(x)[lo:hi]


# --- text interchange --------------------------------------------------------

def _write_block(buf, name, arr):
    buf.write(f"# {name}\n")
    arr = np.atleast_2d(arr) if np.ndim(arr) == 2 else np.asarray(arr).reshape(1, -1)
    for row in arr:
        if row.size:
            buf.write(",".join(repr(float(v)) for v in row) + "\n")


def dumps_lp(lp: LpProblem) -> str:
    """Serialise to a JSON header line followed by CSV blocks."""
    header = {
        "format": "l1tes-lp/1",
        "sense": lp.sense,
        "n_vars": lp.n_vars,
        "n_ineq": lp.n_ineq,
        "n_eq": lp.n_eq,
        "blocks": {k: list(v) for k, v in lp.blocks.items()},
    }
    buf = io.StringIO()
    buf.write(json.dumps(header, sort_keys=True) + "\n")
    _write_block(buf, "cost", lp.cost)
    _write_block(buf, "A_ub", lp.A_ub)
    _write_block(buf, "b_ub", lp.b_ub)
    _write_block(buf, "A_eq", lp.A_eq)
    _write_block(buf, "b_eq", lp.b_eq)
    _write_block(buf, "nonneg", lp.nonneg.astype(float))
    return buf.getvalue()


def loads_lp(text: str) -> LpProblem:
    lines = text.splitlines()
    header = json.loads(lines[0])
    if header.get("format") != "l1tes-lp/1":
        raise ValueError("not an l1tes LP file")
    rows: dict[str, list] = {}
    current = None
    for line in lines[1:]:
        if line.startswith("# "):
            current = line[2:].strip()
            rows[current] = []
        elif line.strip():
            rows[current].append([float(v) for v in line.split(",")])
    n = header["n_vars"]

    def vec(name):
        data = rows.get(name, [])
        return np.array(data[0]) if data else np.zeros(0)

    def mat(name, m):
        data = rows.get(name, [])
        return np.array(data).reshape(m, n) if m else np.zeros((0, n))

    return LpProblem(
        cost=vec("cost"),
        A_ub=mat("A_ub", header["n_ineq"]),
        b_ub=vec("b_ub"),
        A_eq=mat("A_eq", header["n_eq"]),
        b_eq=vec("b_eq"),
        nonneg=vec("nonneg").astype(bool),
        sense=header["sense"],
        blocks={k: tuple(v) for k, v in header.get("blocks", {}).items()},
    )


def save_lp(lp: LpProblem, path) -> None:
    Path(path).write_text(dumps_lp(lp))


def load_lp(path) -> LpProblem:
    return loads_lp(Path(path).read_text())


def write_log_csv(report: SolverReport, path) -> None:
    """Write a solver's iteration or pivot log (a list of flat dicts) as CSV."""
    if not report.log:
        raise ValueError("report has no log; run the solver with verbose=True")
    keys = list(report.log[0])
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=keys, lineterminator="\n")
        w.writeheader()
        w.writerows(report.log)
