"""Command-line entry point: ``nmlr <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 input/parse error, 3 solver
non-convergence, 4 certificate violation found by ``verify``.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .dual import AdmmConfig, solve_dual
from .experiments import certificate_rows, certificates, recover_image, sweep
from .instances import InstanceSpec, generate_instance
from .linalg import SolverError
from .primal import PgConfig, solve_primal_full
from .rules import ReferenceError, RuleKind, lambda_max

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_SOLVER, EXIT_VIOLATION = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _emit_csv(header, rows, out) -> None:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(row[h]) for h in header])
    if out:
        Path(out).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


def _load_xy(args):
    X, Y = io.read_matrix_csv(args.x), io.read_matrix_csv(args.y)
    if X.shape[0] != Y.shape[0]:
        raise io.InputError(f"X has {X.shape[0]} rows but Y has {Y.shape[0]}")
    return X, Y


def _rules(args) -> list[RuleKind]:
    try:
        return [RuleKind.parse(r) for r in args.rules.split(",") if r.strip()]
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _admm(args) -> AdmmConfig:
    return AdmmConfig(tol=args.tol or 1e-8, max_iter=args.max_iter or 5000)


def cmd_lambda_max(args) -> int:
    X, Y = _load_xy(args)
    print(_fmt(lambda_max(X, Y)))
    return EXIT_OK


def cmd_solve_dual(args) -> int:
    X, Y = _load_xy(args)
    sol = solve_dual(X, Y, args.lam, _admm(args))
    if args.out:
        io.write_matrix_csv(sol.B_star, args.out)
    if args.out_c:
        io.write_matrix_csv(sol.C_star, args.out_c)
    print(f"iterations={sol.iterations} converged={sol.converged} "
          f"primal_residual={_fmt(sol.final_primal_residual)} "
          f"dual_residual={_fmt(sol.final_dual_residual)} duality_gap={_fmt(sol.duality_gap)}")
    return EXIT_OK if sol.converged else EXIT_SOLVER


def cmd_solve_primal(args) -> int:
    X, Y = _load_xy(args)
    cfg = PgConfig(max_iter=args.max_iter or 20000, tol=args.tol or 1e-10)
    sol = solve_primal_full(X, Y, args.lam, cfg)
    if args.out:
        io.write_matrix_csv(sol.B, args.out)
    print(f"iterations={sol.iterations} converged={sol.converged} objective={_fmt(sol.objective)}")
    return EXIT_OK if sol.converged else EXIT_SOLVER


def cmd_rules(args) -> int:
    X, Y = _load_xy(args)
    _, certs = certificates(X, Y, args.lambda0_frac, _rules(args), _admm(args))
    header = ["rule", "index", "threshold", "upper", "rank_bound", "non_monotone"]
    _emit_csv(header, certificate_rows(certs), args.out)
    for rule, cert in certs.items():
        if cert.tied:
            print(f"note: {rule.value} thresholds tie at indices {cert.tied}", file=sys.stderr)
    return EXIT_OK


def cmd_verify(args) -> int:
    X, Y = _load_xy(args)
    report = sweep(X, Y, args.lambda0_frac, _rules(args), grid=args.grid, admm=_admm(args))
    names = [r.value for r in report.rules]
    header = ["lambda"] + [f"bound_{n}" for n in names] + ["oracle_rank", "duality_gap"]
    rows = []
    for row in report.rows:
        d = {"lambda": row.lam, "oracle_rank": row.oracle_rank, "duality_gap": row.duality_gap}
        d.update({f"bound_{r.value}": b for r, b in row.bounds.items()})
        rows.append(d)
    _emit_csv(header, rows, args.out)
    bumps = report.rank_increases()
    if bumps:
        print(f"note: oracle rank increased with lambda at {bumps} grid step(s)", file=sys.stderr)
    bad = report.violations()
    if bad:
        for lam, rule in bad:
            print(f"violation: {rule.value} at lambda={_fmt(lam)}", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_simulate(args) -> int:
    spec = InstanceSpec(args.n, args.p, args.q, args.noise_std, args.rank, args.seed)
    X, Y, B = generate_instance(spec)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    for name, M in (("X", X), ("Y", Y), ("B", B)):
        io.write_matrix_csv(M, out / f"{name}.csv")
    return EXIT_OK


def cmd_recover_image(args) -> int:
    image = io.read_pgm(args.image)
    if (args.lam is None) == (args.lambda_frac is None):
        raise UsageError("give exactly one of --lambda or --lambda-frac")
    res = recover_image(image, args.n, args.noise_std, lam=args.lam, lam_frac=args.lambda_frac,
                        seed=args.seed, config=_admm(args))
    if args.out:
        io.write_pgm(res.recovered, args.out)
    print(f"time={res.seconds:.4f} iterations={res.iterations} mse={_fmt(res.mse)} "
          f"lambda={_fmt(res.lam)} converged={res.converged}")
    return EXIT_OK if res.converged else EXIT_SOLVER


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nmlr", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def xy(p):
        p.add_argument("--x", required=True, help="design matrix CSV")
        p.add_argument("--y", required=True, help="response matrix CSV")

    def solver(p):
        p.add_argument("--tol", type=float)
        p.add_argument("--max-iter", type=int)

    p = sub.add_parser("lambda-max", help="print ||X^T Y||_2")
    xy(p)
    p.set_defaults(func=cmd_lambda_max)

    p = sub.add_parser("solve-dual", help="ADMM on the dual problem")
    xy(p)
    solver(p)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--out", help="CSV for the recovered coefficient matrix")
    p.add_argument("--out-c", help="CSV for the normalized dual matrix")
    p.set_defaults(func=cmd_solve_dual)

    p = sub.add_parser("solve-primal", help="proximal-gradient oracle")
    xy(p)
    solver(p)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve_primal)

    p = sub.add_parser("rules", help="certified rank intervals per rule")
    xy(p)
    solver(p)
    p.add_argument("--lambda0-frac", type=float, default=0.5)
    p.add_argument("--rules", default="PSR,PSRi,PSRfn,PSR+")
    p.add_argument("--out")
    p.set_defaults(func=cmd_rules)

    p = sub.add_parser("verify", help="check certificates against the primal oracle")
    xy(p)
    solver(p)
    p.add_argument("--lambda0-frac", type=float, default=0.5)
    p.add_argument("--rules", default="PSR,PSRi,PSRfn,PSR+")
    p.add_argument("--grid", type=int, default=50)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="write a seeded instance as X.csv, Y.csv, B.csv")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--p", type=int, default=200)
    p.add_argument("--q", type=int, default=50)
    p.add_argument("--rank", type=int)
    p.add_argument("--noise-std", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("recover-image", help="recover a PGM image used as B")
    p.add_argument("image")
    solver(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--noise-std", type=float, default=0.01)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--lambda-frac", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="recovered PGM path")
    p.set_defaults(func=cmd_recover_image)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ReferenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (io.InputError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
