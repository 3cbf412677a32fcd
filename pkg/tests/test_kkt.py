import numpy as np
import pytest

from l1tes.ip import solve_ip
from l1tes.kkt import certify, check_kkt
from l1tes.problem import LpProblem, SolverReport, SolverId, Status

from .helpers import random_bounded_lp


def simple():
    # min -x1 - x2, x1 + 2 x2 <= 4, 3 x1 + x2 <= 6, x >= 0; optimum (1.6, 1.2)
    return LpProblem([-1.0, -1.0], [[1.0, 2.0], [3.0, 1.0]], [4.0, 6.0], None, None, [True, True])


def test_hand_certificate_passes():
    # duals solve -1 + z1 + 3 z2 = 0, -1 + 2 z1 + z2 = 0
    res = check_kkt(simple(), [1.6, 1.2], [0.4, 0.2], None)
    assert res.passed


@pytest.mark.parametrize("x, z, field", [
    ([2.0, 1.2], [0.4, 0.2], "primal_infeasibility"),
    ([1.6, 1.2], [-0.4, 0.2], "dual_infeasibility"),
    ([1.0, 1.0], [0.4, 0.2], "complementarity"),
])
def test_each_violation_is_detected(x, z, field):
    res = check_kkt(simple(), x, z, None)
    assert not res.passed
    assert getattr(res, field) > 1e-7


def test_stationarity_with_explicit_bound_duals():
    lp = simple()
    res = check_kkt(lp, [1.6, 1.2], [0.4, 0.2], None, z_bound=[0.5, 0.0])
    assert res.stationarity > 0.1 and not res.passed


def test_free_variable_needs_zero_reduced_cost():
    lp = LpProblem([1.0], [[1.0]], [1.0], None, None, [False])
    assert not check_kkt(lp, [0.0], [0.0], None).passed


def test_certify_requires_duals():
    rep = SolverReport(Status.OPTIMAL, SolverId.IP)
    with pytest.raises(ValueError):
        certify(simple(), [0, 0], rep)


def test_ip_reports_pass():
    rng = np.random.default_rng(1)
    for _ in range(10):
        lp = random_bounded_lp(rng, 4, 6, n_eq=1, free_frac=0.4)
        x, rep = solve_ip(lp)
        assert rep.ok and certify(lp, x, rep).passed
