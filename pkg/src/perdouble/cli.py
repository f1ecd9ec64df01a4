"""Command line entry point.

Exit codes: 0 ok, 2 numeric failure, 3 invariant violation, 64 usage error.
Every flag can also be set through an environment variable named
PERDOUBLE_<FLAG> (upper case, dashes as underscores); explicit flags win.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import artifacts
from .errors import InvariantViolation, NumericFailure
from .finite_rank import MAX_PROGRAM_LEVEL, pushforward_direction, run_program
from .fixed_point import RenormFixedPoint, cascade_oracle, check_invariants, solve_fixed_point
from .induced_map import build_sigma, pressure_table, refine_partition
from .transfer_operator import (
    ToyModel,
    collocation_spectrum,
    lambda0_is_leading,
    toy_max_deviation,
    toy_spectrum_exact,
    toy_spectrum_numeric,
)

EXIT_OK, EXIT_NUMERIC, EXIT_INVARIANT, EXIT_USAGE = 0, 2, 3, 64
ENV_PREFIX = "PERDOUBLE_"


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    degree: int = 40
    solver_tol: float = 1e-12
    n_max: int = 12
    collocation_N: int = 40
    cascade_depth: int = 10
    output_dir: str = "out"
    emit_eigenvectors: bool = False
    seed: int = 0
    g_json: str | None = None

    def validate(self):
        if self.degree < 2 or self.degree % 2:
            raise UsageError("degree must be a positive even integer")
        if not (self.solver_tol > 0 and math.isfinite(self.solver_tol)):
            raise UsageError("solver tolerance must be positive")
        if not 1 <= self.n_max <= MAX_PROGRAM_LEVEL:
            raise UsageError(f"n-max must lie in 1..{MAX_PROGRAM_LEVEL}")
        if not 10 <= self.collocation_N <= 100:
            raise UsageError("collocation-N must lie in 10..100")
        if not 1 <= self.cascade_depth <= 16:
            raise UsageError("cascade-depth must lie in 1..16")
        out = Path(self.output_dir)
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise UsageError(f"output dir not writable: {exc}") from exc
        if not os.access(out, os.W_OK):
            raise UsageError("output dir not writable")
        return self


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _env(name, cast, default):
    raw = os.environ.get(ENV_PREFIX + name.upper().replace("-", "_"))
    if raw is None:
        return default
    try:
        return cast(raw)
    except ValueError:
        raise UsageError(f"bad value for {ENV_PREFIX}{name.upper()}: {raw!r}")


def _flag(raw):
    return raw.strip().lower() in ("1", "true", "yes", "on")


def _common(p):
    d = RunConfig()
    p.add_argument("--degree", type=int, default=_env("degree", int, d.degree))
    p.add_argument("--solver-tol", type=float, default=_env("solver_tol", float, d.solver_tol))
    p.add_argument("--n-max", type=int, default=_env("n_max", int, d.n_max))
    p.add_argument("--collocation-n", dest="collocation_N", type=int,
                   default=_env("collocation_n", int, d.collocation_N))
    p.add_argument("--cascade-depth", type=int, default=_env("cascade_depth", int, d.cascade_depth))
    p.add_argument("--output-dir", default=_env("output_dir", str, d.output_dir))
    p.add_argument("--emit-eigenvectors", action="store_true",
                   default=_env("emit_eigenvectors", _flag, d.emit_eigenvectors))
    p.add_argument("--seed", type=int, default=_env("seed", int, d.seed))
    p.add_argument("--g-json", default=_env("g_json", str, None),
                   help="load the fixed point from this file instead of solving")


def build_parser():
    parser = _Parser(prog="perdouble", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, helptext in [
        ("solve-g", "solve for the fixed point g and write g.json"),
        ("delta", "run the finite-rank program and cross-check delta"),
        ("spectrum", "collocation spectrum of the induced operator"),
        ("pressure", "periodic-orbit pressure sums against their bound"),
        ("all", "every step, with the three-way delta report"),
    ]:
        _common(sub.add_parser(name, help=helptext))
    toy = sub.add_parser("toy", help="affine toy model spectrum")
    _common(toy)
    toy.add_argument("--a", type=float, default=3.0)
    toy.add_argument("--b", type=float, default=6.0)
    toy.add_argument("--t", type=float, default=0.0)
    toy.add_argument("--N", dest="toy_N", type=int, default=20)
    dirp = sub.add_parser("direction", help="sampled expanding direction g_* v_n")
    _common(dirp)
    dirp.add_argument("--level", type=int, default=10)
    dirp.add_argument("--grid-size", type=int, default=512)
    return parser


def _config(ns) -> RunConfig:
    fields = RunConfig.__dataclass_fields__
    return RunConfig(**{k: getattr(ns, k) for k in fields}).validate()


def _out(cfg, name) -> Path:
    return Path(cfg.output_dir) / name


def _fixed_point(cfg, timings):
    t0 = time.perf_counter()
    if cfg.g_json:
        fp = RenormFixedPoint.from_json(Path(cfg.g_json).read_text())
    else:
        fp = solve_fixed_point(cfg.degree, cfg.solver_tol)
    timings["fixed_point"] = time.perf_counter() - t0
    return fp


def _report_timings(timings):
    parts = ", ".join(f"{k} {v:.2f}s" for k, v in timings.items())
    print(f"timings: {parts}")


# -- subcommands -------------------------------------------------------------

def cmd_solve_g(cfg: RunConfig) -> int:
    timings = {}
    fp = _fixed_point(cfg, timings)
    artifacts.write_text(_out(cfg, "g.json"), fp.to_json())
    checks = check_invariants(fp)
    print(f"alpha    = {fp.alpha!r}")
    print(f"residual = {fp.residual:.3e}")
    print(f"concave  = {'OK' if checks['concave'] else 'FAIL'}")
    bad = [k for k, ok in checks.items() if not ok]
    _report_timings(timings)
    if bad:
        print("invariant failures: " + ", ".join(bad), file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def _delta_report(cfg, fp, s, trace, timings, spec=None, casc=None):
    t0 = time.perf_counter()
    if spec is None:
        spec = collocation_spectrum(s, cfg.collocation_N)
    timings["collocation"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    if casc is None:
        casc = cascade_oracle(cfg.cascade_depth)
    timings["cascade"] = time.perf_counter() - t0
    program = trace.lambda_extrapolated
    colloc = spec.leading
    cascade = casc.delta_estimates[-1] if casc.delta_estimates else math.nan
    return {
        "fixed_point": {"alpha": fp.alpha, "residual": fp.residual, "degree": fp.degree},
        "program": {
            "n_max": len(trace.records),
            "lambdas": [r.lambda_n for r in trace.records],
            "lambda_extrapolated": program,
            "checks": trace.check(),
            "failures": trace.failures,
        },
        "collocation": {"N": spec.N, "leading": colloc, "converged": spec.converged},
        "cascade": {"depth": casc.depth, "delta": cascade,
                    "alpha": casc.alpha_estimates[-1] if casc.alpha_estimates else math.nan},
        "cross_check": {
            "program_vs_collocation": abs(program - colloc),
            "program_vs_cascade": abs(program - cascade),
            "collocation_vs_cascade": abs(colloc - cascade),
        },
    }


def cmd_delta(cfg: RunConfig) -> int:
    timings = {}
    fp = _fixed_point(cfg, timings)
    s = build_sigma(fp)
    t0 = time.perf_counter()
    trace = run_program(s, cfg.n_max, reference=None)
    timings["program"] = time.perf_counter() - t0
    artifacts.write_text(_out(cfg, "lambda.csv"), artifacts.lambda_csv(trace))
    artifacts.write_text(_out(cfg, "trace.json"),
                         artifacts.trace_json(trace, cfg.emit_eigenvectors))
    report = _delta_report(cfg, fp, s, trace, timings)
    artifacts.write_text(_out(cfg, "report.json"), artifacts.json_text(report))
    for r in trace.records:
        print(f"n={r.n:2d}  lambda={float(r.lambda_n)!r}  iters={r.iterations}")
    print(f"delta: program(Aitken) {float(report['program']['lambda_extrapolated'])!r}  "
          f"collocation {report['collocation']['leading']!r}  "
          f"cascade {report['cascade']['delta']!r}")
    _report_timings(timings)
    if trace.failures:
        print(f"level failure: {trace.failures[0]}", file=sys.stderr)
        return EXIT_NUMERIC
    if not all(trace.check().values()):
        return EXIT_INVARIANT
    return EXIT_OK


def cmd_spectrum(cfg: RunConfig) -> int:
    timings = {}
    fp = _fixed_point(cfg, timings)
    s = build_sigma(fp)
    spec = collocation_spectrum(s, cfg.collocation_N)
    artifacts.write_text(_out(cfg, "spectrum.json"), spec.to_json())
    rows = [(N, collocation_spectrum(s, N, check_step=0).leading)
            for N in range(10, cfg.collocation_N + 1, 5)]
    artifacts.write_text(_out(cfg, "leading_vs_N.csv"), artifacts.csv_text(["N", "leading"], rows))
    print(f"leading eigenvalue (N={spec.N}) = {spec.leading!r}  converged={spec.converged}")
    return EXIT_OK


def cmd_toy(cfg: RunConfig, a: float, b: float, t: float, N: int) -> int:
    try:
        model = ToyModel(a, b, t)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    n_max = max(0, N - 5)
    exact = toy_spectrum_exact(model, n_max)
    numeric = toy_spectrum_numeric(model, N)
    dev = toy_max_deviation(model, N, n_max)
    lead0 = lambda0_is_leading(a, b, N=N)
    doc = {"a": a, "b": b, "t": t, "N": N, "exact": exact,
           "numeric": [complex(e) for e in numeric.eigenvalues],
           "max_deviation": dev, "lambda0_leading_for_all_t": lead0,
           "b_minus_a_gt_2": b - a > 2}
    artifacts.write_text(_out(cfg, "toy.json"), artifacts.json_text(doc))
    print(f"exact-vs-numeric max deviation = {dev:.3e}; "
          f"lambda_0 leading for all t: {lead0} (b-a>2: {b - a > 2})")
    return EXIT_OK if dev <= 1e-10 and lead0 == (b - a > 2) else EXIT_INVARIANT


def cmd_pressure(cfg: RunConfig) -> int:
    timings = {}
    fp = _fixed_point(cfg, timings)
    s = build_sigma(fp)
    n_max = min(cfg.n_max, 14)
    table = pressure_table(s, n_max)
    artifacts.write_text(_out(cfg, "pressure.csv"), artifacts.pressure_csv(table))
    ok = True
    for r in table:
        good = r["bound_ok"] and r["a1_ok"]
        ok &= good
        print(f"n={r['n']:2d}  sum={r['sum']:.6e}  bound={r['bound']:.6e}  "
              f"{'OK' if good else 'FAIL'}")
    return EXIT_OK if ok else EXIT_INVARIANT


def cmd_direction(cfg: RunConfig, level: int, grid_size: int) -> int:
    if not 1 <= level <= MAX_PROGRAM_LEVEL or grid_size < 2:
        raise UsageError("bad level or grid size")
    timings = {}
    fp = _fixed_point(cfg, timings)
    s = build_sigma(fp)
    trace = run_program(s, level, reference=None)
    if trace.failures:
        print(f"level failure: {trace.failures[0]}", file=sys.stderr)
        return EXIT_NUMERIC
    part = refine_partition(s, level)
    field = pushforward_direction(fp, trace.records[-1].v, part, np.linspace(-1.0, 1.0, grid_size))
    rows = zip(field.x, field.values, field.gap_hits.astype(int))
    artifacts.write_text(_out(cfg, "direction.csv"),
                         artifacts.csv_text(["x", "value", "gap_hit"], rows))
    artifacts.write_text(_out(cfg, f"partition_level{level}.csv"), artifacts.partition_csv(part))
    even = bool(np.array_equal(field.values, field.values[::-1]))
    print(f"direction at level {level}: {grid_size} samples, even={even}, "
          f"gap hits={field.gap_count}")
    return EXIT_OK if even else EXIT_INVARIANT


def cmd_all(cfg: RunConfig) -> int:
    codes = [cmd_solve_g(cfg), cmd_pressure(cfg), cmd_spectrum(cfg), cmd_delta(cfg),
             cmd_toy(cfg, 3.0, 6.0, 0.0, 20)]
    return max(codes)


def main(argv=None) -> int:
    try:
        ns = build_parser().parse_args(argv)
    except SystemExit as exc:  # --help, or a parse error mapped to EXIT_USAGE
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"perdouble: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = _config(ns)
        if ns.command == "solve-g":
            return cmd_solve_g(cfg)
        if ns.command == "delta":
            return cmd_delta(cfg)
        if ns.command == "spectrum":
            return cmd_spectrum(cfg)
        if ns.command == "toy":
            return cmd_toy(cfg, ns.a, ns.b, ns.t, ns.toy_N)
        if ns.command == "pressure":
            return cmd_pressure(cfg)
        if ns.command == "direction":
            return cmd_direction(cfg, ns.level, ns.grid_size)
        return cmd_all(cfg)
    except UsageError as exc:
        print(f"perdouble: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericFailure as exc:
        print(f"perdouble: numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except InvariantViolation as exc:
        print(f"perdouble: invariant violation: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
