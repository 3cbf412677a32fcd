"""Command-line front end: ``l1tes {gen,optimize,bench,grp,oracle-check}``.

A run is described by a :class:`RunConfig`, read from ``--config`` (JSON) and
overridden by explicit flags. Every file written carries the SHA-256 of the
resolved config and the seed.
"""
from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from contextlib import nullcontext
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .grp import backproject, grp_bipolar, grp_pair, premise_holds
from .ip import solve_ip
from .leadfield import (
    TargetSpec, generate_synthetic_leadfield, load_leadfield_csv,
    save_leadfield_csv, split_and_project, target_for_point,
)
from .metrics import intensity
from .oracle import OracleLimits, solve_exact
from .problem import LpProblem
from .search import (
    SOLVERS, LatticeSpec, SearchError, lattice_csv, run_two_stage, taylor_whisker,
)
from .simplex import SimplexSettings, solve_simplex

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


@dataclass
class RunConfig:
    seed: int = 1
    electrodes: int = 16
    field_rows: int = 200
    decay: float = 2.0
    leadfield: str | None = None  # CSV path; overrides the synthetic generator
    target_point: int = 5
    target_rows: list | None = None  # explicit rows; overrides target_point
    target_direction: list = field(default_factory=lambda: [0.0, 0.0, 1.0])
    target_amplitude: float = 3.85
    mu: float = 4e-3
    gamma: float | None = None  # defaults to mu / 2
    alpha_db: list = field(default_factory=lambda: [-100.0, -20.0])
    epsilon_db: list = field(default_factory=lambda: [-160.0, 0.0])
    resolution: list = field(default_factory=lambda: [15, 15])
    db_convention: str = "amplitude"
    solvers: list = field(default_factory=lambda: ["ip"])
    montage_size: int | None = None
    out: str = "results"
    workers: int = 1

    # fields that do not change results and so stay out of the hash
    _UNHASHED = ("out", "workers")

    def validate(self):
        if not self.solvers:
            raise ValueError("solver list is empty")
        bad = [s for s in self.solvers if s not in SOLVERS]
        if bad:
            raise ValueError(f"unknown solver(s) {bad}; choose from {SOLVERS}")
        if self.leadfield is not None and not Path(self.leadfield).is_file():
            raise ValueError(f"lead-field file {self.leadfield} does not exist")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        self.lattice()  # raises on a bad lattice

    @property
    def gamma_cap(self) -> float:
        return self.mu / 2 if self.gamma is None else self.gamma

    def lattice(self) -> LatticeSpec:
        return LatticeSpec(tuple(self.alpha_db), tuple(self.epsilon_db),
                           tuple(int(n) for n in self.resolution), self.db_convention)

    def hashed_dict(self) -> dict:
        d = dataclasses.asdict(self)
        for k in self._UNHASHED:
            d.pop(k)
        return d

    def sha256(self) -> str:
        blob = json.dumps(self.hashed_dict(), sort_keys=True, separators=(",", ":"))
        if self.leadfield is not None:
            blob += hashlib.sha256(Path(self.leadfield).read_bytes()).hexdigest()
        return hashlib.sha256(blob.encode()).hexdigest()

    def stamp(self) -> str:
        return f"config_sha256={self.sha256()} seed={self.seed}"


# --- config plumbing ---------------------------------------------------------

def _pair(kind):
    def parse(text):
        parts = [kind(v) for v in text.replace("x", ",").split(",")]
        if len(parts) != 2:
            raise argparse.ArgumentTypeError(f"expected two values, got {text!r}")
        return parts
    return parse


def _floats(text):
    return [float(v) for v in text.split(",")]


def _ints(text):
    return [int(v) for v in text.split(",")]


def _solvers(text):
    return [s.strip() for s in text.split(",") if s.strip()]


def _add_config_flags(p: argparse.ArgumentParser, lattice: bool = True):
    g = p.add_argument_group("run configuration (flags override --config)")
    g.add_argument("--config", help="JSON file with RunConfig fields")
    g.add_argument("--seed", type=int)
    g.add_argument("--electrodes", type=int, help="number of electrodes L (synthetic)")
    g.add_argument("--field-rows", type=int, dest="field_rows", help="number of field rows N (synthetic)")
    g.add_argument("--decay", type=float, help="distance decay of the synthetic kernel")
    g.add_argument("--leadfield", help="lead-field CSV to use instead of the generator")
    g.add_argument("--target-point", type=int, dest="target_point",
                   help="field point whose (x, y, z) rows form the target")
    g.add_argument("--target-rows", type=_ints, dest="target_rows", help="explicit target rows, e.g. 0,1,2")
    g.add_argument("--target-direction", type=_floats, dest="target_direction", help="e.g. 0,0,1")
    g.add_argument("--target-amplitude", type=float, dest="target_amplitude", help="A/m^2")
    g.add_argument("--mu", type=float, help="total dose in A")
    g.add_argument("--gamma", type=float, help="per-channel cap in A (default mu/2)")
    g.add_argument("--out", help="output directory")
    if lattice:
        g.add_argument("--alpha-db", type=_pair(float), dest="alpha_db", help="low,high")
        g.add_argument("--epsilon-db", type=_pair(float), dest="epsilon_db", help="low,high")
        g.add_argument("--resolution", type=_pair(int), help="n_alpha x n_epsilon, e.g. 15x15")
        g.add_argument("--db-convention", choices=("amplitude", "power"), dest="db_convention")
        g.add_argument("--solvers", type=_solvers, help=f"comma list from {','.join(SOLVERS)}")
        g.add_argument("--montage-size", type=int, dest="montage_size")
        g.add_argument("--workers", type=int, help="parallel lattice workers (processes)")


def load_config(args) -> RunConfig:
    cfg = RunConfig()
    names = {f.name for f in dataclasses.fields(RunConfig)}
    if getattr(args, "config", None):
        raw = json.loads(Path(args.config).read_text())
        unknown = set(raw) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        for k, v in raw.items():
            setattr(cfg, k, v)
    for k in names:
        v = getattr(args, k, None)
        if v is not None:
            setattr(cfg, k, v)
    cfg.validate()
    return cfg


def build_problem(cfg: RunConfig):
    """(LeadField, SplitLeadField) described by ``cfg``."""
    if cfg.leadfield is not None:
        lf = load_leadfield_csv(cfg.leadfield)
    else:
        lf = generate_synthetic_leadfield(cfg.seed, cfg.electrodes, cfg.field_rows, cfg.decay)
    if cfg.target_rows is not None:
        t = TargetSpec(tuple(cfg.target_rows), np.asarray(cfg.target_direction, float), cfg.target_amplitude)
    else:
        t = target_for_point(lf, cfg.target_point, cfg.target_direction, cfg.target_amplitude)
    return lf, split_and_project(lf, t)


def _limit_threads():
    threadpool_limits(1)


def _executor(workers: int):
    if workers <= 1:
        return nullcontext(None)
    return ProcessPoolExecutor(max_workers=workers, initializer=_limit_threads)


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _finite(v):
    return None if v is None or (isinstance(v, float) and not math.isfinite(v)) else v


# --- subcommands ---------------------------------------------------------------

def cmd_gen(cfg: RunConfig) -> int:
    lf = generate_synthetic_leadfield(cfg.seed, cfg.electrodes, cfg.field_rows, cfg.decay)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "leadfield.csv"
    save_leadfield_csv(lf, csv_path, comment=cfg.stamp())
    sidecar = {"generator": "synthetic", "seed": cfg.seed, "n_electrodes": cfg.electrodes,
               "n_field_rows": cfg.field_rows, "decay": cfg.decay,
               "config_sha256": cfg.sha256(), "version": __version__}
    _write(out / "leadfield.json", json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    print(csv_path)
    return EXIT_OK


def _lattice_summary(res, n_electrodes):
    out = {"gamma_max": _finite(res.gamma_max), "theta_max": _finite(res.theta_max),
           "gamma0": _finite(res.gamma0), "argmax_gamma": res.argmax_gamma,
           "argmax_theta": res.argmax_theta_constrained, "n_failed": res.n_failed,
           "n_points": len(res.points), "wall_time": res.wall_time,
           "electrodes": list(res.electrodes)}
    if res.argmax_gamma is not None:
        pg, pt = res.point(res.argmax_gamma), res.point(res.argmax_theta_constrained)
        out.update(
            nnz_gamma=pg.metrics.nnz, nnz_theta=pt.metrics.nnz,
            pattern_gamma=res.full_pattern(res.argmax_gamma, n_electrodes).tolist(),
            pattern_theta=res.full_pattern(res.argmax_theta_constrained, n_electrodes).tolist(),
        )
        if min(res.spec.shape) >= 3:
            out["whisker_gamma"] = _finite(taylor_whisker(res.grid("gamma"), res.argmax_gamma).max_deviation)
            out["whisker_theta"] = _finite(
                taylor_whisker(res.grid("theta"), res.argmax_theta_constrained).max_deviation)
    return out


def _healthy(res) -> bool:
    return res.argmax_gamma is not None and res.n_failed <= 0.5 * len(res.points)


def cmd_optimize(cfg: RunConfig) -> int:
    lf, slf = build_problem(cfg)
    spec = cfg.lattice()
    out = Path(cfg.out)
    stamp = cfg.stamp()
    grp_y = grp_bipolar(slf, cfg.mu)
    bp = backproject(slf)
    summary = {"config": cfg.hashed_dict(), "config_sha256": cfg.sha256(), "seed": cfg.seed,
               "grp_gamma": intensity(slf, grp_y), "grp_pair": list(grp_pair(bp)),
               "grp_premise_holds": premise_holds(bp), "solvers": {}}
    ok = True
    with threadpool_limits(1), _executor(cfg.workers) as ex:
        for solver in cfg.solvers:
            try:
                two = run_two_stage(slf, spec, solver, cfg.mu, cfg.gamma_cap, cfg.montage_size, ex)
            except SearchError as err:
                print(f"error: {err}", file=sys.stderr)
                return EXIT_FAILED
            stages = {"stage1": two.stage1, "stage2_gamma": two.stage2_gamma,
                      "stage2_theta": two.stage2_theta}
            for name, res in stages.items():
                _write(out / f"{solver}_{name}.csv", lattice_csv(res, stamp))
            block = {name: _lattice_summary(res, slf.n_electrodes) for name, res in stages.items()}
            block["montage_gamma"] = list(two.montage_gamma)
            block["montage_theta"] = list(two.montage_theta)
            block["timings"] = two.timings
            block["gamma_max"] = block["stage2_gamma"]["gamma_max"]
            block["theta_max"] = block["stage2_theta"]["theta_max"]
            summary["solvers"][solver] = block
            for name, res in stages.items():
                if res.n_failed > 0.5 * len(res.points):
                    print(f"error: {solver} failed at {res.n_failed}/{len(res.points)} points of {name}; "
                          "aborting", file=sys.stderr)
                    _write(out / "summary.json", json.dumps(summary, indent=2) + "\n")
                    return EXIT_FAILED
                ok &= _healthy(res)
    _write(out / "summary.json", json.dumps(summary, indent=2) + "\n")
    for solver, block in summary["solvers"].items():
        print(f"{solver}: gamma_max={block['gamma_max']:.6g} theta_max={block['theta_max']:.6g} "
              f"(grp_gamma={summary['grp_gamma']:.6g})")
    return EXIT_OK if ok else EXIT_FAILED


BENCH_POINT_COLUMNS = ("solver", "stage", "alpha_db", "epsilon_db", "status", "iterations",
                       "wall_time", "objective", "gamma", "theta")
BENCH_SUMMARY_COLUMNS = ("solver", "stage1_time", "stage2_time", "total_time", "n_points",
                         "n_optimal", "max_gamma_diff_vs_ip", "max_theta_diff_vs_ip",
                         "max_objective_diff_vs_ip", "gamma_envelope")


def _stage_rows(solver, name, res):
    for p in res.points:
        yield [solver, name, repr(p.alpha_db), repr(p.epsilon_db), p.report.status.value,
               p.report.iterations, f"{p.report.wall_time:.6f}", repr(float(p.report.objective)),
               repr(p.metrics.gamma_intensity), repr(p.metrics.theta_focality)]


def _max_diff(a, b):
    d = np.abs(np.asarray(a) - np.asarray(b))
    d = d[np.isfinite(d)]
    return float(d.max()) if d.size else math.nan


def cmd_bench(cfg: RunConfig) -> int:
    """Run every solver on the same instance; per-point and per-solver tables."""
    lf, slf = build_problem(cfg)
    spec = cfg.lattice()
    out = Path(cfg.out)
    stamp = cfg.stamp()
    grp_gamma = intensity(slf, grp_bipolar(slf, cfg.mu))
    runs = {}
    with threadpool_limits(1), _executor(cfg.workers) as ex:
        for solver in cfg.solvers:
            try:
                runs[solver] = run_two_stage(slf, spec, solver, cfg.mu, cfg.gamma_cap, cfg.montage_size, ex)
            except SearchError as err:
                print(f"error: {err}", file=sys.stderr)
                return EXIT_FAILED

    def stage1_values(solver, attr):
        pts = runs[solver].stage1.points
        if attr == "objective":
            return [p.report.objective if p.report.ok else math.nan for p in pts]
        return [getattr(p.metrics, attr) for p in pts]

    ref = "ip" if "ip" in runs else cfg.solvers[0]
    rows = []
    for solver, two in runs.items():
        t1 = two.stage1.solve_time
        t2 = two.stage2_gamma.solve_time
        if two.stage2_theta is not two.stage2_gamma:
            t2 += two.stage2_theta.solve_time
        diffs = [_max_diff(stage1_values(solver, a), stage1_values(ref, a))
                 for a in ("gamma_intensity", "theta_focality", "objective")]
        rows.append([solver, t1, t2, t1 + t2, len(two.stage1.points),
                     sum(p.report.ok for p in two.stage1.points), *diffs,
                     1e-5 * (1.0 + grp_gamma)])
    rows.sort(key=lambda r: r[3])

    buf = [f"# {stamp}\n", ",".join(BENCH_POINT_COLUMNS) + "\n"]
    for solver, two in runs.items():
        for name in ("stage1", "stage2_gamma", "stage2_theta"):
            res = getattr(two, name)
            if name == "stage2_theta" and res is two.stage2_gamma:
                continue
            buf += [",".join(str(v) for v in r) + "\n" for r in _stage_rows(solver, name, res)]
    _write(out / "bench_points.csv", "".join(buf))
    text = [f"# {stamp} reference_solver={ref} grp_gamma={grp_gamma!r}\n",
            ",".join(BENCH_SUMMARY_COLUMNS) + "\n"]
    for r in rows:
        text.append(",".join(f"{v:.6g}" if isinstance(v, float) else str(v) for v in r) + "\n")
    _write(out / "bench_summary.csv", "".join(text))
    print("".join(text[1:]), end="")
    return EXIT_OK if all(_healthy(two.stage1) for two in runs.values()) else EXIT_FAILED


def cmd_grp(cfg: RunConfig) -> int:
    _, slf = build_problem(cfg)
    bp = backproject(slf)
    y = grp_bipolar(slf, cfg.mu)
    report = {"config_sha256": cfg.sha256(), "seed": cfg.seed, "pair": list(grp_pair(bp)),
              "gamma": intensity(slf, y), "pattern": y.currents.tolist(),
              "backprojection": bp.values.tolist(), "order": bp.order.tolist(),
              "premise_holds": premise_holds(bp)}
    print(json.dumps(report, indent=2))
    return EXIT_OK


def _random_lp(rng, n, m):
    A = rng.normal(size=(m - 1, n))
    x0 = rng.uniform(size=n)
    b = A @ x0 + rng.uniform(0.1, 1.0, size=m - 1)
    A = np.vstack([A, np.ones(n)])
    b = np.append(b, 2.0 * n)
    return LpProblem(rng.normal(size=n), A, b, None, None, np.ones(n, bool))


def cmd_oracle_check(cfg: RunConfig, count: int = 20, tol: float = 1e-6) -> int:
    """Random in-limit LPs: IP and both simplex variants against the oracle."""
    rng = np.random.default_rng(cfg.seed)
    lim = OracleLimits()
    worst = 0.0
    for k in range(count):
        n = int(rng.integers(2, lim.max_vars + 1))
        m = int(rng.integers(2, lim.max_rows + 1))
        lp = _random_lp(rng, n, m)
        _, ref = solve_exact(lp, lim)
        objs = {"ip": solve_ip(lp)[1], "primal": solve_simplex(lp, SimplexSettings("primal"))[1],
                "dual": solve_simplex(lp, SimplexSettings("dual"))[1]}
        line = [f"lp{k:02d} n={n} m={m} oracle={ref.objective:.10g}"]
        for name, rep in objs.items():
            diff = abs(rep.objective - ref.objective)
            worst = max(worst, diff if rep.ok else math.inf)
            line.append(f"{name}={rep.status.value}:{diff:.1e}")
        print(" ".join(line))
    print(f"worst absolute difference {worst:.3e} (tolerance {tol:g})")
    return EXIT_OK if worst <= tol else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="l1tes", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    _add_config_flags(sub.add_parser("gen", help="write a synthetic lead field CSV + JSON sidecar"),
                      lattice=False)
    _add_config_flags(sub.add_parser("optimize", help="two-stage lattice search per solver"))
    _add_config_flags(sub.add_parser("bench", help="solver timing/accuracy comparison"))
    _add_config_flags(sub.add_parser("grp", help="print the reciprocity (GRP) bipolar montage"),
                      lattice=False)
    oc = sub.add_parser("oracle-check", help="compare solvers with the exact oracle on random LPs")
    oc.add_argument("--seed", type=int)
    oc.add_argument("--count", type=int, default=20)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
    except (ValueError, OSError, json.JSONDecodeError) as err:
        parser.error(str(err))
    t0 = time.perf_counter()
    if args.command == "gen":
        code = cmd_gen(cfg)
    elif args.command == "optimize":
        code = cmd_optimize(cfg)
    elif args.command == "bench":
        code = cmd_bench(cfg)
    elif args.command == "grp":
        code = cmd_grp(cfg)
    else:
        code = cmd_oracle_check(cfg, args.count)
    print(f"[{args.command}] done in {time.perf_counter() - t0:.2f} s", file=sys.stderr)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
