"""Command-line front end: ``mkdvfd {run,table,sweep,verify}``.

Run configs are flat ``key = value`` text files (``#`` starts a comment)::

    problem = two_soliton
    scheme = EC10
    lambda = 0.04
    dx = 0.1
    dt = 0.025
    T = 10
    output_dir = runs/ec10

Exit codes: 0 success, 1 failed verification, 2 config or usage error,
3 solver non-convergence, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analysis import PROBLEMS, RunResult, get_problem, run_benchmark, steps_for, sweep_lambda
from .banded import SingularMatrixError
from .schemes import SchemeFamily, SchemeSpec
from .solver import NewtonConfig, NonConvergenceError

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 1, 2, 3, 4

CONFIG_KEYS = ("problem", "scheme", "lambda", "a", "b", "dx", "dt", "T", "newton_tol",
               "newton_max_iters", "snapshot_stride", "output_dir")

log = logging.getLogger("mkdvfd")


class ConfigError(ValueError):
    pass


def fmt(v) -> str:
    """17 significant digits, so reports round-trip exactly."""
    return format(float(v), ".17g")


# --------------------------------------------------------------------------
# config

@dataclass
class RunConfig:
    problem: str
    scheme: SchemeFamily
    lam: float
    a: float
    b: float
    dx: float
    dt: float
    T: float
    newton: NewtonConfig
    output_dir: str
    snapshot_stride: int

    @property
    def spec(self) -> SchemeSpec:
        return SchemeSpec(self.scheme, self.lam)

    @property
    def N(self) -> int:
        return steps_for(self.T, self.dt)

    def to_text(self) -> str:
        lines = [f"problem = {self.problem}", f"scheme = {self.scheme.value}",
                 f"lambda = {self.lam!r}", f"a = {self.a!r}", f"b = {self.b!r}",
                 f"dx = {self.dx!r}", f"dt = {self.dt!r}", f"T = {self.T!r}",
                 f"newton_tol = {self.newton.tol_residual!r}",
                 f"newton_max_iters = {self.newton.max_iters}",
                 f"snapshot_stride = {self.snapshot_stride}",
                 f"output_dir = {self.output_dir}"]
        return "\n".join(lines) + "\n"


def parse_config_text(text: str, source: str = "<config>") -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        values[key] = value
    return values


def build_config(values: dict, source: str = "<config>") -> RunConfig:
    def num(key, default=None, kind=float):
        if key not in values:
            if default is None:
                raise ConfigError(f"{source}: missing required key {key!r}")
            return default
        try:
            return kind(values[key])
        except ValueError:
            raise ConfigError(f"{source}: bad value for {key!r}: {values[key]!r}") from None

    try:
        prob = get_problem(values.get("problem", ""))
        scheme = SchemeFamily.parse(values.get("scheme", ""))
    except ValueError as err:
        raise ConfigError(f"{source}: {err}") from None
    lam = num("lambda", 0.0)
    a, b = num("a", prob.a), num("b", prob.b)
    dx, dt, T = num("dx", prob.dx), num("dt", prob.dt), num("T", prob.T)
    if not (dx > 0 and dt > 0 and T >= 0 and b > a):
        raise ConfigError(f"{source}: need dx > 0, dt > 0, T >= 0 and b > a")
    if abs((b - a) / dx - round((b - a) / dx)) > 1e-9:
        raise ConfigError(f"{source}: (b - a)/dx must be an integer")
    try:
        newton = NewtonConfig(tol_residual=num("newton_tol", 1e-12),
                              max_iters=num("newton_max_iters", 50, int))
        cfg = RunConfig(prob.name, scheme, lam, a, b, dx, dt, T, newton,
                        values.get("output_dir", "."), num("snapshot_stride", 0, int))
        cfg.spec, cfg.N
    except ValueError as err:
        raise ConfigError(f"{source}: {err}") from None
    if cfg.snapshot_stride < 0:
        raise ConfigError(f"{source}: snapshot_stride must be >= 0")
    return cfg


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from None
    return build_config(parse_config_text(text, str(path)), str(path))


# --------------------------------------------------------------------------
# run

def execute(cfg: RunConfig) -> RunResult:
    return run_benchmark(cfg.spec, cfg.problem, cfg.dx, cfg.dt, cfg.T, cfg.newton,
                         stride=cfg.snapshot_stride or None, domain=(cfg.a, cfg.b))


def report_dict(cfg: RunConfig, res: RunResult) -> dict:
    e = res.report
    iters = res.trajectory.newton_iters[1:]
    return {
        "problem": cfg.problem, "scheme": cfg.scheme.value, "lambda": cfg.lam,
        "label": cfg.spec.label(), "a": cfg.a, "b": cfg.b, "dx": cfg.dx, "dt": cfg.dt,
        "T": cfg.T, "M": res.grid.M, "N": res.trajectory.N,
        "sol_err": e.sol_err, "err1": e.err1, "err2": e.err2, "err3": e.err3,
        "err_phi1": e.err_phi1, "err_phi2": e.err_phi2, "err_phi": e.err_phi,
        "preserved_laws": list(e.preserved_laws), "fallback_used": list(e.fallback_used),
        "fallback_v": "nodal" if cfg.scheme.points == 10 else "8-point average",
        "wall_time": res.wall_time,
        "newton_iters_total": int(iters.sum()),
        "newton_iters_mean": float(iters.mean()) if iters.size else 0.0,
        "newton_iters_max": int(iters.max()) if iters.size else 0,
        "newton_residual_max": float(res.trajectory.residual_norms.max()),
    }


def dump_report(d: dict) -> str:
    """JSON with every float written to 17 significant digits."""
    def enc(v):
        if isinstance(v, bool) or v is None or isinstance(v, str):
            return json.dumps(v)
        if isinstance(v, int):
            return str(v)
        if isinstance(v, float):
            return fmt(v) if math.isfinite(v) else json.dumps(None)
        if isinstance(v, (list, tuple)):
            return "[" + ", ".join(enc(x) for x in v) + "]"
        raise TypeError(type(v))
    body = ",\n".join(f"  {json.dumps(k)}: {enc(v)}" for k, v in d.items())
    return "{\n" + body + "\n}\n"


def write_outputs(out: Path, cfg: RunConfig, res: RunResult) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(cfg.to_text())
    (out / "report.json").write_text(dump_report(report_dict(cfg, res)))
    traj = res.trajectory
    with open(out / "invariants.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "t", "mass_sum", "momentum_sum", "energy_sum", "newton_iters"])
        for n, (t, row) in enumerate(zip(traj.times, traj.sums)):
            w.writerow([n, fmt(t), *map(fmt, row), int(traj.newton_iters[n])])
    x = res.grid.x
    with open(out / "snapshots.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "t", "i", "x", "u"])
        for n, u in zip(traj.state_steps, traj.states):
            for i in range(res.grid.M):
                w.writerow([n, fmt(n * res.grid.dt), i, fmt(x[i]), fmt(u[i])])
    with open(out / "final.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["i", "x", "u", "u_exact"])
        for i in range(res.grid.M):
            w.writerow([i, fmt(x[i]), fmt(res.final[i]), fmt(res.exact_final[i])])


def run_config(cfg: RunConfig, out: Path) -> int:
    try:
        res = execute(cfg)
    except (NonConvergenceError, SingularMatrixError) as err:
        step = getattr(err, "step_index", None)
        print(f"error: solver failed at step {step}: {err}", file=sys.stderr)
        return EXIT_SOLVER
    try:
        write_outputs(out, cfg, res)
    except OSError as err:
        print(f"error: cannot write outputs to {out}: {err}", file=sys.stderr)
        return EXIT_IO
    e = res.report
    print(f"{cfg.spec.label()} {cfg.problem}: sol_err={e.sol_err:.4g} err1={e.err1:.3g} "
          f"err2={e.err2:.4g} err3={e.err3:.4g} -> {out}")
    return EXIT_OK


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out) if args.out else Path(cfg.output_dir)
    return run_config(cfg, out)


# --------------------------------------------------------------------------
# tables

TABLES = {
    1: ("two_soliton", 0.1, 0.025,
        [("EC8", 0), ("EC8", 1), ("EC8", -0.05), ("MC8", 0), ("MC8", -0.077), ("MC8", -0.073),
         ("EC10", 0), ("EC10", 0.04), ("EC10", 0.20), ("MC10", 0), ("MC10", 0.19),
         ("NarrowBox", 0), ("Multisymplectic", 0)]),
    2: ("two_soliton", 0.2, 0.05,
        [("EC8", 0), ("EC8", 0.97), ("EC8", -0.06), ("MC8", 0), ("MC8", -0.079),
         ("MC8", -0.075), ("EC10", 0), ("EC10", 0.05), ("EC10", 0.21), ("MC10", 0),
         ("MC10", 0.19), ("NarrowBox", 0), ("Multisymplectic", 0)]),
    3: ("breather", 0.02, 0.002,
        [("EC8", 0), ("EC8", 2.22), ("EC8", 0.49), ("MC8", 0), ("MC8", -0.165),
         ("MC8", -0.128), ("EC10", 0), ("EC10", 0.92), ("EC10", 0.78), ("MC10", 0),
         ("MC10", 1.15), ("NarrowBox", 0), ("Multisymplectic", 0)]),
}


def table_configs(table: int) -> list[RunConfig]:
    problem, dx, dt, rows = TABLES[table]
    prob = PROBLEMS[problem]
    out = []
    for fam, lam in rows:
        fam = SchemeFamily.parse(fam)
        name = f"t{table}_{fam.value}" + (f"_{lam:g}" if fam.parametrized else "")
        out.append(RunConfig(problem, fam, float(lam), prob.a, prob.b, dx, dt, prob.T,
                             NewtonConfig(), name, 0))
    return out


def _row_key(problem, scheme, lam, dx, dt, T):
    return (problem, scheme, round(float(lam), 9), round(float(dx), 12),
            round(float(dt), 12), round(float(T), 9))


def collect_reports(root: Path) -> dict:
    found = {}
    for path in sorted(root.rglob("report.json")):
        try:
            d = json.loads(path.read_text())
            found[_row_key(d["problem"], d["scheme"], d["lambda"], d["dx"], d["dt"], d["T"])] = d
        except (OSError, ValueError, KeyError) as err:
            log.warning("skipping unreadable report %s: %s", path, err)
    return found


def _run_one(args):
    cfg, out = args
    res = execute(cfg)
    write_outputs(Path(out), cfg, res)
    return str(out)


def format_table(table: int, reports: list[dict]) -> tuple[str, str]:
    phases = TABLES[table][0] == "two_soliton"
    head = ["Method", "Err1", "Err2", "Err3", "Sol. Err."]
    if phases:
        head += ["Errphi1", "Errphi2", "Errphi"]

    def disp(v):
        if v is None:
            return "-"
        return f"{v:.2e}" if abs(v) < 1e-3 and v != 0 else f"{v:.4f}"

    md = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    rows_csv = [head]
    for d in reports:
        vals = [d["err1"], d["err2"], d["err3"], d["sol_err"]]
        cells = [disp(v) for v in vals]
        if phases:
            ph = [d["err_phi1"], d["err_phi2"], d["err_phi"]]
            vals += ph
            cells += ["-" if v is None else f"{v:.2f}" for v in ph]
        md.append("| " + " | ".join([d["label"], *cells]) + " |")
        rows_csv.append([d["label"], *["" if v is None else fmt(v) for v in vals]])
    csv_text = "\n".join(",".join(r) for r in rows_csv) + "\n"
    return "\n".join(md) + "\n", csv_text


def cmd_table(args) -> int:
    table = args.table
    if table not in TABLES:
        print(f"error: unknown table {table}; choose from {sorted(TABLES)}", file=sys.stderr)
        return EXIT_CONFIG
    root = Path(args.config)
    cfgs = table_configs(table)
    keys = [_row_key(c.problem, c.scheme.value, c.lam, c.dx, c.dt, c.T) for c in cfgs]
    found = collect_reports(root) if root.is_dir() else {}
    missing = [c for c, k in zip(cfgs, keys) if k not in found]
    if missing and args.run_missing:
        jobs = [(c, root / c.output_dir) for c in missing]
        try:
            if args.threads > 1:
                with ProcessPoolExecutor(args.threads) as ex:
                    list(ex.map(_run_one, jobs))
            else:
                for job in jobs:
                    _run_one(job)
        except (NonConvergenceError, SingularMatrixError) as err:
            print(f"error: {err}", file=sys.stderr)
            return EXIT_SOLVER
        except OSError as err:
            print(f"error: {err}", file=sys.stderr)
            return EXIT_IO
        found = collect_reports(root)
        missing = [c for c, k in zip(cfgs, keys) if k not in found]
    if missing:
        names = ", ".join(c.spec.label() for c in missing)
        print(f"error: table {table} is missing runs for: {names} "
              f"(use --run-missing to compute them)", file=sys.stderr)
        return EXIT_CONFIG
    md, csv_text = format_table(table, [found[k] for k in keys])
    out = Path(args.out) if args.out else root
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / f"table{table}.md").write_text(md)
        (out / f"table{table}.csv").write_text(csv_text)
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_IO
    print(md, end="")
    return EXIT_OK


# --------------------------------------------------------------------------

def cmd_sweep(args) -> int:
    try:
        fam = SchemeFamily.parse(args.family)
        res = sweep_lambda(fam, args.problem, args.objective, tuple(args.range), args.samples,
                           args.dx, args.dt, workers=args.threads)
    except (ValueError, ConfigError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except RuntimeError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_SOLVER
    d = {"family": fam.value, "problem": args.problem, "objective": args.objective,
         "range": [float(args.range[0]), float(args.range[1])], "samples": args.samples,
         "lambda_star": res.lambda_star, "objective_value": res.objective_value,
         "evaluated_lambda": sorted(res.evaluated),
         "evaluated_value": [res.evaluated[k] for k in sorted(res.evaluated)]}
    text = dump_report(d)
    if args.out:
        try:
            Path(args.out).mkdir(parents=True, exist_ok=True)
            (Path(args.out) / f"sweep_{fam.value}_{args.objective}.json").write_text(text)
        except OSError as err:
            print(f"error: {err}", file=sys.stderr)
            return EXIT_IO
    print(text, end="")
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_suite
    res = run_suite(trials=args.trials, seed=args.seed)
    print("\n".join(res.lines))
    print("all checks passed" if res.ok else "SOME CHECKS FAILED")
    return EXIT_OK if res.ok else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mkdvfd", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="integrate one benchmark from a config file")
    r.add_argument("--config", required=True)
    r.add_argument("--out", help="output directory (overrides output_dir)")
    r.set_defaults(func=cmd_run)

    t = sub.add_parser("table", help="assemble Table 1, 2 or 3 from run reports")
    t.add_argument("--config", required=True, help="directory holding run outputs")
    t.add_argument("--table", type=int, required=True)
    t.add_argument("--out")
    t.add_argument("--run-missing", action="store_true",
                   help="compute absent rows into the config directory")
    t.add_argument("--threads", type=int, default=1)
    t.set_defaults(func=cmd_table)

    s = sub.add_parser("sweep", help="minimize an objective over the family parameter")
    s.add_argument("--family", required=True)
    s.add_argument("--problem", default="two_soliton", choices=sorted(PROBLEMS))
    s.add_argument("--objective", default="solution_error",
                   choices=["solution_error", "unpreserved_invariant"])
    s.add_argument("--range", type=float, nargs=2, default=(-1.0, 1.0))
    s.add_argument("--samples", type=int, default=11)
    s.add_argument("--dx", type=float)
    s.add_argument("--dt", type=float)
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)

    v = sub.add_parser("verify", help="run the solution-independent checks")
    v.add_argument("--trials", type=int, default=100)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--threads", type=int, default=1)
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
