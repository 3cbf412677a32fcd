from fractions import Fraction

import numpy as np
import pytest

from l1tes.assembler import L1L1Params, assemble_l1l1
from l1tes.ip import solve_ip
from l1tes.leadfield import SplitLeadField
from l1tes.oracle import MAX_BASES, OracleLimitError, OracleLimits, solve_exact, solve_exact_rational
from l1tes.problem import LpProblem, SolverId, Status
from l1tes.simplex import SimplexSettings, solve_simplex

from .helpers import random_bounded_lp


def test_one_variable():
    x, rep = solve_exact(LpProblem([-1.0], [[1.0]], [1.0], None, None, [True]))
    assert rep.ok and rep.solver_id is SolverId.ORACLE
    assert x[0] == 1.0


def test_infeasible_pair():
    _, rep = solve_exact(LpProblem([1.0], [[1.0]], [-1.0], None, None, [True]))
    assert rep.status is Status.INFEASIBLE


@pytest.mark.parametrize("lp", [
    LpProblem([-1.0], [[-1.0]], [0.0], None, None, [True]),
    LpProblem([-1.0, 1.0], [[1.0, 0.0]], [1.0], None, None, [False, False]),  # lineality along x2
    LpProblem([-1.0, -1.0], [[1.0, -1.0]], [1.0], None, None, [True, True]),
])
def test_unbounded(lp):
    assert solve_exact(lp)[1].status is Status.UNBOUNDED


def test_flat_lineality_is_bounded():
    # free direction x2 exists but costs nothing
    x, rep = solve_exact(LpProblem([-1.0, 0.0], [[1.0, 0.0]], [1.0], None, None, [False, False]))
    assert rep.ok and rep.objective == -1.0


def test_limits():
    rng = np.random.default_rng(0)
    with pytest.raises(OracleLimitError):
        solve_exact(random_bounded_lp(rng, 9, 4))
    with pytest.raises(OracleLimitError):
        solve_exact(random_bounded_lp(rng, 3, 15))
    assert OracleLimits() == OracleLimits(8, 14)
    # the largest default instance stays inside the enumeration budget
    from math import comb
    assert comb(8 + 14, 8) < MAX_BASES


def tiny_instance():
    slf = SplitLeadField(l1=np.array([[1.0, -0.5]]), l2=np.array([[0.3, 0.2]]), x1=np.array([3.85]))
    return slf, assemble_l1l1(slf, L1L1Params(alpha=0.0, epsilon=0.0))


def test_tiny_l1l1_fits_after_bound_merge():
    _, lp = tiny_instance()
    assert lp.n_ineq == 15  # 4 of these repeat sign bounds and are merged
    x, rep = solve_exact(lp)
    assert rep.ok


def test_tiny_l1l1_hand_value_and_rational_recheck():
    _, lp = tiny_instance()
    x, rep = solve_exact(lp)
    # alpha = eps = 0: fit residual 3.85 - max(y1 - y2/2) and nuisance |0.3 y1 + 0.2 y2|.
    # y = (2, -2) mA gives 3.85 - 3e-3 + 2e-4; y = (2, 0) is infeasible (zero sum),
    # so the bipolar optimum is the hand value below.
    hand = 3.85 - (2e-3 + 0.5 * 2e-3) + abs(0.3 * 2e-3 - 0.2 * 2e-3)
    assert rep.objective == pytest.approx(hand, abs=1e-12)
    xq, best = solve_exact_rational(lp)
    assert isinstance(best, Fraction)
    assert float(best) == pytest.approx(rep.objective, abs=1e-14)


@pytest.mark.parametrize("seed", range(10))
def test_exhaustive_never_beaten(seed):
    rng = np.random.default_rng(300 + seed)
    lp = random_bounded_lp(rng, 3, 5)
    _, rep = solve_exact(lp)
    # 1e5 random points in the box implied by sum(x) <= 6, x >= 0
    pts = rng.dirichlet(np.ones(4), size=100_000)[:, :3] * 6.0
    feas = np.all(pts @ lp.A_ub.T <= lp.b_ub, axis=1)
    assert feas.any()
    assert (pts[feas] @ lp.cost).min() >= rep.objective - 1e-12


@pytest.mark.parametrize("seed", range(10))
def test_agrees_with_solvers(seed):
    rng = np.random.default_rng(400 + seed)
    lp = random_bounded_lp(rng, int(rng.integers(2, 6)), int(rng.integers(3, 9)), n_eq=seed % 2)
    _, ref = solve_exact(lp)
    for solver in (solve_ip, solve_simplex, lambda p: solve_simplex(p, SimplexSettings("dual"))):
        _, rep = solver(lp)
        assert rep.objective == pytest.approx(ref.objective, abs=1e-6)


def test_numpy_twin_matches_kernel():
    from l1tes import kernels
    from l1tes.oracle import _canonical

    rng = np.random.default_rng(9)
    lp = random_bounded_lp(rng, 4, 7)
    G, h, E, e, c, _ = _canonical(lp)
    a = kernels.enumerate_vertices.py_func(E, e, G, h, c, 1e-9, 1e-12)
    b = kernels.enumerate_vertices_numpy(E, e, G, h, c, 1e-9, 1e-12)
    assert a[0] == b[0] and a[3] == b[3]
    np.testing.assert_allclose(a[1], b[1], atol=1e-12)
