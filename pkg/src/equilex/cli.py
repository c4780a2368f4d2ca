"""Command line interface.

    equilex build CONFIG [--seed N] [--output PATH]
    equilex verify REPORT [--tol T]
    equilex modulus CONFIG --tau T [T ...] [--samples N] [--seed N]
    equilex matrix-gate --c C --n-max N [--samples N] [--seed N]

Exit codes: 0 success, 2 construction or verification failure, 1 usage
error.  The seed is taken from ``--seed``, then ``EQUILEX_SEED``, then the
config.
"""

import argparse
import logging
import os
import sys

import numpy as np

from .errors import ConfigError, EquilexError

SEED_ENV = "EQUILEX_SEED"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def resolve_seed(flag, config_seed):
    """``flag`` > ``$EQUILEX_SEED`` > config."""
    if flag is not None:
        return int(flag)
    env = os.environ.get(SEED_ENV)
    if env not in (None, ""):
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{SEED_ENV}={env!r} is not an integer") from None
    return int(config_seed)


def cmd_build(args):
    from .builder import build
    from .config import load_config
    from .report import emit_report

    cfg = load_config(args.config)
    seed = resolve_seed(args.seed, cfg["seed"])
    path = args.output or cfg["output.path"]
    try:
        result = build(cfg, seed=seed)
    except EquilexError as exc:
        code = emit_report(cfg, error=exc, path=path, seed=seed)
        print(f"build failed at step {getattr(exc, 'step_index', '?')}: {type(exc).__name__}: {exc}", file=sys.stderr)
        print(f"report written to {path}")
        return 1 if code == 1 else 2
    code = emit_report(cfg, result=result, path=path, seed=seed)
    if code == 1:
        print(f"could not write {path}", file=sys.stderr)
        return 1
    print(f"lambda = {result.lam:.17g}")
    print(f"defect = {result.defect:.3e} over {len(result.points)} points")
    print(f"report written to {path}")
    return 0


def recompute_defect(rep):
    """Pairwise ``l_p`` distances straight from the report's coordinates."""
    p = float(rep["space"]["p"])
    lam = float(rep["lambda"])
    X = np.asarray(rep["points"], dtype=float)
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] != int(rep["space"]["dim"]):
        raise ValueError("points do not match the declared dimension")
    diff = np.abs(X[:, None, :] - X[None, :, :])
    D = np.sum(diff**p, axis=-1) ** (1.0 / p)
    n = X.shape[0]
    off = D[~np.eye(n, dtype=bool)]
    defect = float(np.max(np.abs(off - lam))) if n > 1 else 0.0
    return defect, D


def cmd_verify(args):
    from .report import load_report

    try:
        rep = load_report(args.report)
        defect, D = recompute_defect(rep)
        tol = args.tol if args.tol is not None else float(rep["config"]["builder.final_tol"])
    except (OSError, ValueError, KeyError, TypeError) as exc:
        print(f"malformed report {args.report}: {exc}", file=sys.stderr)
        return 1
    ok = defect <= tol
    print(f"points = {D.shape[0]}, lambda = {float(rep['lambda']):.17g}")
    print(f"recomputed defect = {defect:.3e} (tol {tol:.1e}): {'ok' if ok else 'FAILED'}")
    return 0 if ok else 2


def cmd_modulus(args):
    from .config import load_config, make_oracle, make_policy, make_source
    from .norms import extended_modulus_of_smoothness, modulus_of_smoothness

    cfg = load_config(args.config)
    seed = resolve_seed(args.seed, cfg["seed"])
    oracle = make_oracle(cfg)
    source = make_source(cfg, oracle)
    policy = make_policy(cfg)
    sub = args.subspace_dim or cfg["builder.n_points"]
    print(f"{'tau':>8} {'rho_base':>14} {'rho_extended':>14}")
    for tau in args.tau:
        ext, pairs = extended_modulus_of_smoothness(oracle, source, policy, tau, sub, samples=args.ext_samples, seed=seed, return_pairs=True)
        base = modulus_of_smoothness(oracle, tau, samples=args.samples, seed=seed, pairs=pairs)
        print(f"{tau:8.4g} {base:14.8f} {ext:14.8f}")
    return 0


def cmd_matrix_gate(args):
    from .gate import eps_schedule, verify_schedule

    seed = resolve_seed(args.seed, 0)
    sched = eps_schedule(args.c, args.n_max)
    rows = verify_schedule(args.c, args.n_max, samples=args.samples, seed=seed)
    print(f"C = {args.c:.6g}, N_max = {args.n_max}")
    print(f"{'N':>3} {'eps_N':>12} {'R_N':>12} {'max ||A^-1||':>14} {'failures':>9}")
    for r in rows:
        eps = f"{sched.eps_at(r['N']):12.4e}" if r["N"] >= 2 else f"{'-':>12}"
        print(f"{r['N']:3d} {eps} {r['R_N']:12.4e} {r['max_inverse_norm']:14.4e} {r['failures']:9d}")
    return 0 if all(r["failures"] == 0 for r in rows) else 2


def make_parser():
    ap = _Parser(prog="equilex", description="Build and check equilateral sets in smooth normed spaces.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("build", help="run a construction and write a report")
    b.add_argument("config")
    b.add_argument("--seed", type=int)
    b.add_argument("--output", "-o")
    b.set_defaults(func=cmd_build)

    v = sub.add_parser("verify", help="recompute the defect of a report")
    v.add_argument("report")
    v.add_argument("--tol", type=float)
    v.set_defaults(func=cmd_verify)

    m = sub.add_parser("modulus", help="sampled moduli of smoothness")
    m.add_argument("config")
    m.add_argument("--tau", type=float, nargs="+", required=True)
    m.add_argument("--samples", type=int, default=100_000)
    m.add_argument("--ext-samples", type=int, default=20_000)
    m.add_argument("--subspace-dim", type=int)
    m.add_argument("--seed", type=int)
    m.set_defaults(func=cmd_modulus)

    g = sub.add_parser("matrix-gate", help="print and sample-check an epsilon schedule")
    g.add_argument("--c", type=float, required=True)
    g.add_argument("--n-max", type=int, required=True)
    g.add_argument("--samples", type=int, default=1000)
    g.add_argument("--seed", type=int)
    g.set_defaults(func=cmd_matrix_gate)
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, UsageError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
