"""Command-line interface.

Subcommands: ``verify``, ``sample``, ``eval`` and ``simulate``.  Options may
also be given in a ``key = value`` file passed with ``--config``; keys are
option names with dashes or underscores, and command-line flags override
the file.

Exit codes: 0 success, 1 a check failed, 2 usage or parameter error,
3 numerical budget exhausted (enumeration, quadrature or SDE step control).
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import __version__
from .ensembles import EnsembleParams, laguerre_density, laguerre_sample, meixner_pmf, meixner_sample
from .kernels1d import (
    ChainParams,
    DiffusionParams,
    bd_free_kernel,
    bd_stat_kernel,
    k_density,
    q_density,
)
from .km_nd import bd_nd_free, bd_nd_stat, k_nd, q_nd
from .links import EnumerationBudgetError, lambda_n, lambda_n_sigma, lambda_sample, lambda_star
from .montecarlo import (
    OrderingViolationError,
    SimConfig,
    chain_simulate_conditioned,
    sde_simulate_free,
    sde_simulate_stationary,
)
from .quadrature import QuadratureError
from .scalar_math import DomainError
from .verify import IDENTITIES, render_table, reports_to_json, run_suite
from .weyl import ChamberPointD, schur_eval, vandermonde

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def read_config_file(path: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


# ---------------------------------------------------------------------------
# output helpers


def _provenance(args) -> dict:
    # destinations and the thread count do not change the data, and keeping
    # them out lets identical runs produce identical files
    skip = {"func", "config", "output", "paths_output", "output_dir", "workers"}
    return {"version": __version__, "config": {k: v for k, v in vars(args).items() if k not in skip}}


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    return open(path, "w", newline=""), True


def write_csv(path, columns, rows, args) -> None:
    """CSV with ``#`` provenance lines, a header row and one row per record."""
    fh, close = _open_out(path)
    try:
        prov = _provenance(args)
        fh.write(f"# kmlinks {prov['version']}\n")
        fh.write(f"# config: {json.dumps(prov['config'], sort_keys=True, default=str)}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else int(v) for v in row])
    finally:
        if close:
            fh.close()


# ---------------------------------------------------------------------------
# verify


def cmd_verify(args) -> int:
    identities = IDENTITIES if args.identity in (None, "all") else (args.identity,)
    if args.suite not in ("all",) + IDENTITIES:
        raise UsageError(f"unknown suite {args.suite!r}")
    if args.identity is None and args.suite != "all":
        identities = (args.suite,)
    kw = {}
    if args.beta:
        kw["betas"] = tuple(args.beta)
    if args.sigma:
        kw["sigmas"] = tuple(args.sigma)
    if args.t:
        kw["times"] = tuple(args.t)
    if args.n:
        if any(n not in (1, 2, 3) for n in args.n):
            raise UsageError("N must be 1, 2 or 3 for the verification grid")
        kw["n_values"] = tuple(args.n)
    elif not 1 <= args.n_max <= 3:
        raise UsageError("--n-max must be 1, 2 or 3")
    reports = run_suite(identities, n_max=args.n_max, workers=args.workers, **kw)
    table = render_table(reports)
    print(table)
    ok = all(r.passed for r in reports)
    if args.output_dir:
        os.makedirs(args.output_dir, exist_ok=True)
        prov = _provenance(args)
        with open(os.path.join(args.output_dir, "verify_report.json"), "w") as fh:
            fh.write(reports_to_json(reports, **prov))
        with open(os.path.join(args.output_dir, "verify_report.txt"), "w") as fh:
            fh.write(f"# kmlinks {prov['version']}\n# config: {json.dumps(prov['config'], default=str)}\n")
            fh.write(table + "\n")
    print("ALL CHECKS PASSED" if ok else "SOME CHECKS FAILED")
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# sample


def cmd_sample(args) -> int:
    if args.count < 0:
        raise UsageError("--count must be non-negative")
    rng = np.random.default_rng(args.seed)
    if args.ensemble == "laguerre":
        p = EnsembleParams(args.n, args.beta)
        data = laguerre_sample(p, rng, args.count, method=args.method or "auto")
        cols = [f"x{i + 1}" for i in range(args.n)]
    elif args.ensemble == "meixner":
        p = EnsembleParams(args.n, args.beta, args.sigma)
        data = meixner_sample(p, rng, args.count, method=args.method or "pushforward")
        cols = [f"y{i + 1}" for i in range(args.n)]
    elif args.ensemble == "lambda":
        if args.x is None:
            raise UsageError("sample lambda needs --x")
        x = np.asarray(args.x, dtype=float)
        data = lambda_sample(x, rng, size=args.count) if args.count else np.empty((0, len(x)), dtype=np.int64)
        cols = [f"y{i + 1}" for i in range(len(x))]
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(args.ensemble)
    write_csv(args.output, cols, data, args)
    return EXIT_OK


# ---------------------------------------------------------------------------
# eval


def _need(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"eval {args.quantity} needs --" + ", --".join(m.replace("_", "-") for m in missing))


def evaluate(args) -> float:
    q = args.quantity
    if q == "vandermonde":
        _need(args, "x")
        return vandermonde(args.x)
    if q == "schur":
        _need(args, "x", "y")
        return schur_eval(ChamberPointD(tuple(int(v) for v in args.y)), args.x)
    if q == "lambda":
        _need(args, "x", "y")
        return lambda_n(args.x, [int(v) for v in args.y])
    if q == "lambda-sigma":
        _need(args, "x", "y", "sigma")
        return lambda_n_sigma(args.sigma, args.x, [int(v) for v in args.y])
    if q == "lambda-star":
        _need(args, "x", "y", "beta")
        return lambda_star(args.beta, [int(v) for v in args.y], args.x)
    if q in ("q", "k"):
        _need(args, "x", "y", "beta", "t")
        if len(args.x) == 1:
            fn = q_density if q == "q" else k_density
            return float(fn(DiffusionParams(args.beta, args.t), args.x[0], args.y[0]))
        fn = q_nd if q == "q" else k_nd
        return fn(args.beta, args.t, args.x, args.y).value
    if q in ("bd-free", "bd-stat"):
        _need(args, "x", "y", "beta", "t")
        xs, ys = [int(v) for v in args.x], [int(v) for v in args.y]
        sigma = args.sigma if args.sigma is not None else 1.0
        if len(xs) == 1:
            if q == "bd-free":
                return bd_free_kernel(ChainParams(args.beta, args.t), xs[0], ys[0]).value
            return bd_stat_kernel(ChainParams(args.beta, args.t, sigma), xs[0], ys[0]).value
        if q == "bd-free":
            return bd_nd_free(args.beta, args.t, xs, ys).value
        return bd_nd_stat(args.beta, sigma, args.t, xs, ys).value
    if q == "laguerre":
        _need(args, "x", "beta")
        return float(laguerre_density(EnsembleParams(len(args.x), args.beta), np.asarray(args.x)))
    if q == "meixner":
        _need(args, "y", "beta")
        sigma = args.sigma if args.sigma is not None else 1.0
        return float(meixner_pmf(EnsembleParams(len(args.y), args.beta, sigma), np.asarray(args.y, dtype=np.int64)))
    raise UsageError(f"unknown quantity {q!r}")  # pragma: no cover


def cmd_eval(args) -> int:
    for name in ("x", "y"):
        v = getattr(args, name)
        if v is not None and args.n is not None and len(v) != args.n:
            raise UsageError(f"--{name} has {len(v)} coordinates but --n is {args.n}")
    value = evaluate(args)
    print(f"{value:.15g}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(args) -> int:
    if args.x0 is None:
        raise UsageError("simulate needs --x0")
    n = len(args.x0)
    cfg = SimConfig(n=n, beta=args.beta, t_end=args.t_end, dt=args.dt, n_paths=args.paths, seed=args.seed,
                    sigma=args.sigma)
    if args.system == "chain":
        step = args.step if args.step is not None else args.t_end
        path = chain_simulate_conditioned(cfg, [int(v) for v in args.x0], step, kind=args.kind)
        rows = [
            [k * step, p] + list(path[k, p])
            for k in range(path.shape[0]) for p in range(path.shape[1])
        ]
        write_csv(args.output, ["time", "path"] + [f"y{i + 1}" for i in range(n)], rows, args)
        return EXIT_OK
    fn = sde_simulate_free if args.system == "free" else sde_simulate_stationary
    res = fn(cfg, args.x0)
    data = res.terminal
    mean, var = data.mean(axis=0), data.var(axis=0, ddof=1) if len(data) > 1 else np.zeros(n)
    se = np.sqrt(var / len(data))
    rows = [[i + 1, mean[i], se[i], var[i]] for i in range(n)]
    write_csv(args.output, ["coordinate", "mean", "std_error", "variance"], rows, args)
    if args.paths_output:
        write_csv(args.paths_output, [f"x{i + 1}" for i in range(n)], data, args)
    print(json.dumps(res.diagnostics()), file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kmlinks", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"kmlinks {__version__}")
    parser.add_argument("--config", help="key = value file with option defaults")
    parser.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                        help="parallel workers for grid checks (default: number of processors)")
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--workers", type=int, default=argparse.SUPPRESS, help=argparse.SUPPRESS)

    v = sub.add_parser("verify", parents=[common], help="run the identity verification suites")
    v.add_argument("--suite", default="all", help="'all' or one identity name")
    v.add_argument("--identity", choices=("all",) + IDENTITIES, default=None)
    v.add_argument("--n-max", type=int, default=3)
    v.add_argument("--n", type=_int_list, default=None, help="comma-separated N values")
    v.add_argument("--beta", type=_float_list, default=None)
    v.add_argument("--sigma", type=_float_list, default=None)
    v.add_argument("--t", type=_float_list, default=None)
    v.add_argument("--output-dir", default=None, help="write verify_report.json and verify_report.txt here")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("sample", parents=[common], help="draw ensemble or link samples as CSV")
    s.add_argument("ensemble", choices=("laguerre", "meixner", "lambda"))
    s.add_argument("--n", type=int, default=2)
    s.add_argument("--beta", type=float, default=1.0)
    s.add_argument("--sigma", type=float, default=1.0)
    s.add_argument("--x", type=_float_list, default=None, help="starting point for 'lambda'")
    s.add_argument("--count", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--method", default=None)
    s.add_argument("--output", default="-", help="CSV path, '-' for stdout")
    s.set_defaults(func=cmd_sample)

    e = sub.add_parser("eval", parents=[common], help="evaluate a kernel, link or density")
    e.add_argument("quantity", choices=("lambda", "lambda-sigma", "lambda-star", "q", "k", "bd-free", "bd-stat",
                                        "laguerre", "meixner", "vandermonde", "schur"))
    e.add_argument("--n", type=int, default=None)
    e.add_argument("--x", type=_float_list, default=None)
    e.add_argument("--y", type=_float_list, default=None)
    e.add_argument("--beta", type=float, default=None)
    e.add_argument("--sigma", type=float, default=None)
    e.add_argument("--t", type=float, default=None)
    e.set_defaults(func=cmd_eval)

    m = sub.add_parser("simulate", parents=[common], help="Monte Carlo runs")
    m.add_argument("system", choices=("free", "stationary", "chain"))
    m.add_argument("--x0", type=_float_list, default=None)
    m.add_argument("--beta", type=float, default=1.0)
    m.add_argument("--sigma", type=float, default=None)
    m.add_argument("--t-end", type=float, default=1.0)
    m.add_argument("--dt", type=float, default=1e-3)
    m.add_argument("--step", type=float, default=None, help="skeleton step for 'chain'")
    m.add_argument("--kind", choices=("free", "stationary"), default="free", help="chain kind for 'chain'")
    m.add_argument("--paths", type=int, default=10_000)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--output", default="-")
    m.add_argument("--paths-output", default=None, help="optional CSV of terminal states")
    m.set_defaults(func=cmd_simulate)
    return parser


def _apply_config(parser, argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    values = read_config_file(known.config)
    top = {"workers"}
    sub_action = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    dests = {a.dest for sp in sub_action.choices.values() for a in sp._actions} | top
    unknown = sorted(set(values) - dests)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    parser.set_defaults(**{k: v for k, v in values.items() if k in top})
    for sp in sub_action.choices.values():
        own = {a.dest for a in sp._actions}
        sp.set_defaults(**{k: v for k, v in values.items() if k in own})


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    except (UsageError, OSError) as exc:
        print(f"kmlinks: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (EnumerationBudgetError, QuadratureError, OrderingViolationError) as exc:
        print(f"kmlinks: numerical budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (UsageError, DomainError, ValueError) as exc:
        print(f"kmlinks: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
