"""End-to-end acceptance checks, one test per criterion.

Each test records a one-line verdict that the terminal-summary hook prints at
the end of the run, whether the test passes or fails. The seeded corpus is ten
synthetic lead fields (L = 16, N = 200, seeds 1..10) targeting the z component
at field point 5.
"""
import csv
import time
from contextlib import contextmanager

import numpy as np
import pytest

from l1tes.assembler import L1L1Params, assemble_l1l1
from l1tes.cli import main
from l1tes.grp import appendix_increment, backproject, grp_bipolar, grp_k_intensity, grp_pair, premise_holds
from l1tes.ip import solve_ip
from l1tes.kkt import certify
from l1tes.leadfield import SplitLeadField, generate_synthetic_leadfield, split_and_project, target_for_point
from l1tes.metrics import intensity
from l1tes.oracle import OracleLimits, solve_exact
from l1tes.problem import Status
from l1tes.search import GAMMA0_FRACTION, LATTICE_IP, LatticeSpec, run_lattice, run_two_stage, taylor_whisker
from l1tes.simplex import SimplexSettings, solve_simplex

from .helpers import ACCEPTANCE, random_bounded_lp, tiny_slf

MU = 4e-3
CORPUS_SEEDS = range(1, 11)
DENSE_SEEDS = range(1, 6)


@contextmanager
def verdict(key, describe):
    """Record PASS/FAIL for criterion ``key``; ``describe()`` builds the detail line."""
    info = {}
    try:
        yield info
    except BaseException:
        ACCEPTANCE[key] = (False, describe(info))
        raise
    ACCEPTANCE[key] = (True, describe(info))


def corpus_slf(seed):
    lf = generate_synthetic_leadfield(seed, 16, 200, 2.0)
    return split_and_project(lf, target_for_point(lf, 5, (0.0, 0.0, 1.0)))


@pytest.fixture(scope="module")
def corpus():
    """Two-stage IP search on the 15 x 15 lattice for every corpus instance."""
    t0 = time.perf_counter()
    out = {}
    for seed in CORPUS_SEEDS:
        slf = corpus_slf(seed)
        out[seed] = (slf, run_two_stage(slf, LatticeSpec(), "ip", MU))
    out["elapsed"] = time.perf_counter() - t0
    return out


def test_criterion_1_oracle_equivalence():
    rng = np.random.default_rng(20240601)
    lim = OracleLimits()
    worst = {"ip": 0.0, "primal": 0.0, "dual": 0.0}
    solvers = {"ip": solve_ip,
               "primal": lambda lp: solve_simplex(lp, SimplexSettings("primal")),
               "dual": lambda lp: solve_simplex(lp, SimplexSettings("dual"))}
    describe = lambda i: (f"{i.get('count', 0)} LPs, worst |diff| "
                          + " ".join(f"{k}={v:.1e}" for k, v in worst.items())
                          + f", {i.get('elapsed', float('nan')):.1f} s")
    with verdict(1, describe) as info:
        t0 = time.perf_counter()
        lps = []
        for _ in range(50):
            n = int(rng.integers(2, lim.max_vars + 1))
            m = int(rng.integers(2, lim.max_rows + 1))
            lps.append(random_bounded_lp(rng, n, m))
        for _ in range(10):
            slf = tiny_slf(rng)
            alpha = 10 ** rng.uniform(-4, 0)
            eps = 10 ** rng.uniform(-4, 0)
            lps.append(assemble_l1l1(slf, L1L1Params(alpha=alpha, epsilon=eps, mu=2.0, gamma=1.0)))
        for lp in lps:
            _, ref = solve_exact(lp, lim)
            assert ref.ok
            for name, solve in solvers.items():
                _, rep = solve(lp)
                assert rep.ok, (name, rep.status)
                worst[name] = max(worst[name], abs(rep.objective - ref.objective))
        info["count"] = len(lps)
        info["elapsed"] = time.perf_counter() - t0
        assert max(worst.values()) <= 1e-6
        assert info["elapsed"] < 60


def test_criterion_2_grp_upper_bound(corpus):
    ratios = []
    describe = lambda i: (f"Gamma_max / Gamma_GRP in [{min(ratios, default=np.nan):.9f}, "
                          f"{max(ratios, default=np.nan):.9f}] over {len(ratios)} lattices, "
                          f"{corpus['elapsed']:.0f} s")
    with verdict(2, describe):
        for seed in CORPUS_SEEDS:
            slf, two = corpus[seed]
            g_grp = intensity(slf, grp_bipolar(slf, MU))
            for res in (two.stage1, two.stage2_gamma, two.stage2_theta):
                ratios.append(res.gamma_max / g_grp)
            assert max(ratios[-3:]) <= 1 + 1e-6
            assert two.stage1.gamma_max >= 0.9 * g_grp
            assert two.stage2_gamma.gamma_max >= 0.9 * g_grp
        assert corpus["elapsed"] < 600


def test_criterion_3_bipolar_recovery(corpus):
    hits = []
    describe = lambda i: f"stage-2 Gamma_max pattern is the GRP pair with NNZ = 2 on {sum(hits)}/{len(hits)} instances"
    with verdict(3, describe):
        for seed in CORPUS_SEEDS:
            slf, two = corpus[seed]
            s2 = two.stage2_gamma
            y = s2.full_pattern(s2.argmax_gamma, slf.n_electrodes)
            support = np.flatnonzero(np.abs(y) >= 1e-3 * np.abs(y).max())
            ok = (s2.point(s2.argmax_gamma).metrics.nnz == 2
                  and sorted(support.tolist()) == sorted(grp_pair(backproject(slf))))
            hits.append(ok)
        assert all(hits)


def test_criterion_4_appendix_properties():
    counts = {}
    describe = lambda i: (f"increment >= 0 on {counts.get('simplex', 0)} ordered simplex vectors, "
                          f"K = 2 optimal on {counts.get('bp', 0)} backprojections, "
                          f"{i.get('elapsed', float('nan')):.1f} s")
    with verdict(4, describe) as info:
        t0 = time.perf_counter()
        rng = np.random.default_rng(7)
        n_simplex = 0
        while n_simplex < 100_000:
            K = int(rng.integers(3, 13))
            lam = -np.sort(-rng.dirichlet(np.ones(K), size=5_000), axis=1)
            lam = lam[lam[:, 0] <= 0.5][: 100_000 - n_simplex]
            for row in lam:
                assert appendix_increment(row) >= 0.0
            n_simplex += lam.shape[0]
        counts["simplex"] = n_simplex

        n_bp = 0
        while n_bp < 1_000:
            L = int(rng.integers(3, 17))
            b = rng.normal(size=L) * rng.uniform(0.1, 3.0, size=L)
            slf = SplitLeadField(l1=b[None, :], l2=np.ones((1, L)), x1=np.array([1.0]))
            bp = backproject(slf)
            if not premise_holds(bp):
                continue
            vals = [grp_k_intensity(bp, MU, k) for k in range(2, L + 1)]
            assert max(vals) == vals[0]
            n_bp += 1
        counts["bp"] = n_bp
        info["elapsed"] = time.perf_counter() - t0
        assert info["elapsed"] < 30


def test_criterion_5_metacriterion(corpus):
    checked = []
    describe = lambda i: f"Gamma >= 0.75 Gamma_max at every reported Theta_max ({len(checked)} lattices)"
    with verdict(5, describe):
        for seed in CORPUS_SEEDS:
            _, two = corpus[seed]
            for res in (two.stage1, two.stage2_gamma, two.stage2_theta):
                assert res.gamma0 == GAMMA0_FRACTION * res.gamma_max
                assert res.point(res.argmax_theta_constrained).metrics.gamma_intensity >= res.gamma0
                checked.append(res)


def test_criterion_6_lattice_density(corpus):
    w = {"gamma": {15: [], 40: []}, "theta": {15: [], 40: []}}
    med = lambda m, n: float(np.median(w[m][n])) if w[m][n] else float("nan")
    describe = lambda i: (f"median whisker 15x15 -> 40x40: Gamma {med('gamma', 15):.2e} -> {med('gamma', 40):.2e}, "
                          f"Theta {med('theta', 15):.2e} -> {med('theta', 40):.2e} (seeds {DENSE_SEEDS[0]}..{DENSE_SEEDS[-1]})")
    with verdict(6, describe):
        for seed in DENSE_SEEDS:
            slf, two = corpus[seed]
            dense = run_lattice(slf, LatticeSpec(resolution=(40, 40)), "ip", MU)
            for n, res in ((15, two.stage1), (40, dense)):
                w["gamma"][n].append(taylor_whisker(res.grid("gamma"), res.argmax_gamma).max_deviation)
                w["theta"][n].append(taylor_whisker(res.grid("theta"), res.argmax_theta_constrained).max_deviation)
        assert med("gamma", 40) <= med("gamma", 15)
        assert med("theta", 40) <= med("theta", 15)


def test_criterion_7_kkt_certification():
    tally = {"optimal": 0, "passed": 0}
    describe = lambda i: (f"{tally['passed']}/{tally['optimal']} optimal IP results pass the KKT check at 1e-7 "
                          "(non-optimal runs are oracle-confirmed unbounded)")
    with verdict(7, describe):
        rng = np.random.default_rng(99)
        jobs = [(random_bounded_lp(rng, int(rng.integers(2, 9)), int(rng.integers(3, 15)),
                                   n_eq=int(rng.integers(0, 2)), free_frac=0.2), None) for _ in range(100)]
        spec = LatticeSpec()
        for seed in (1, 2):
            slf = corpus_slf(seed)
            for a in spec.from_db(spec.alpha_db):
                for e in spec.from_db(spec.epsilon_db):
                    jobs.append((assemble_l1l1(slf, L1L1Params(alpha=a, epsilon=e, mu=MU)), LATTICE_IP))
        for lp, settings in jobs:
            x, rep = solve_ip(lp, settings)
            if rep.ok:
                tally["optimal"] += 1
                tally["passed"] += certify(lp, x, rep, tol=1e-7).passed
            else:
                # free variables make some random LPs unbounded; lattice LPs never are
                assert settings is None and solve_exact(lp)[1].status is Status.UNBOUNDED
        assert tally["passed"] == tally["optimal"]


def test_criterion_8_determinism(tmp_path):
    compared = []
    describe = lambda i: f"{len(compared)} CSV files byte-identical between workers=1 and workers=2"
    with verdict(8, describe):
        a, b = tmp_path / "serial", tmp_path / "parallel"
        assert main(["optimize", "--out", str(a), "--workers", "1"]) == 0
        assert main(["optimize", "--out", str(b), "--workers", "2"]) == 0
        files = sorted(p.name for p in a.glob("*.csv"))
        assert files == sorted(p.name for p in b.glob("*.csv")) and files
        for name in files:
            assert (a / name).read_bytes() == (b / name).read_bytes(), name
            compared.append(name)


def test_criterion_9_solver_bench(tmp_path):
    stats = {}
    describe = lambda i: ("max per-point |Gamma_ip - Gamma_simplex| "
                          + " ".join(f"{k}={v[0]:.1e}" for k, v in stats.items())
                          + f" (envelope {i.get('envelope', float('nan')):.1e}); Theta diff "
                          + " ".join(f"{k}={v[1]:.1e}" for k, v in stats.items()))
    with verdict(9, describe) as info:
        argv = ["bench", "--electrodes", "8", "--field-rows", "60", "--resolution", "5x5",
                "--solvers", "ip,primal,dual", "--out", str(tmp_path)]
        assert main(argv) == 0
        summary = [ln for ln in (tmp_path / "bench_summary.csv").read_text().splitlines()
                   if not ln.startswith("#")]
        rows = list(csv.DictReader(summary))
        assert {r["solver"] for r in rows} == {"ip", "primal", "dual"}
        envelope = float(rows[0]["gamma_envelope"])
        info["envelope"] = envelope

        points = [ln for ln in (tmp_path / "bench_points.csv").read_text().splitlines()
                  if not ln.startswith("#")]
        table = {}
        for r in csv.DictReader(points):
            if r["stage"] == "stage1":
                table[(r["solver"], r["alpha_db"], r["epsilon_db"])] = (float(r["gamma"]), float(r["theta"]))
        keys = [(a, e) for s, a, e in table if s == "ip"]
        assert len(keys) == 25
        for solver in ("primal", "dual"):
            dg = [abs(table[(solver, a, e)][0] - table[("ip", a, e)][0]) for a, e in keys]
            dt = [abs(table[(solver, a, e)][1] - table[("ip", a, e)][1]) for a, e in keys]
            stats[solver] = (max(dg), max(dt))
        assert all(v[0] <= envelope for v in stats.values())
