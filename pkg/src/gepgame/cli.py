"""Command-line front end: ``gepgame solve``, ``gepgame curve`` and ``gepgame verify``.

Exit codes: 0 success, 1 a verification property failed, 2 configuration or
input error, 3 numerical failure during a run.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, _backend
from .core import generalized_rayleigh, oracle_solve
from .datagen import SignalSpec, data_rng, generate_correlated_views, generate_mixed_signals, generate_random_gep
from .errors import (
    ConfigInvalid,
    DimensionMismatch,
    GepError,
    NonPositiveDenominator,
    NotConverged,
    NotSpd,
    NotSymmetric,
    RankDeficient,
    StreamExhausted,
)
from .estimators import PairedDataset, cca_problem, ica_problem, raw_spd_problem
from .game import EXAMPLE_2X2_A, EXAMPLE_2X2_B, utility_curve
from .parallel import MODES, PER_WORKER
from .solvers import (
    Optimizer,
    SolverConfig,
    solve_deterministic,
    solve_smooth_stochastic,
    solve_stochastic,
)
from .textio import atomic_write_text, format_float, read_matrix, read_paired_csv, write_matrix
from .verify import format_table, run_suite

EXIT_OK, EXIT_PROPERTY, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
DEFAULT_RHO = 1e-6

RHO_WARNING = (
    "warning: rho must lower-bound the smallest eigenvalue of B; "
    "pass --rho <value> (or --rho auto for {auto:g})"
)


class UsageError(Exception):
    """Bad flag combination; maps to exit code 2."""


def fingerprint(data: bytes) -> str:
    return hashlib.blake2b(data, digest_size=8).hexdigest()


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


def _write_json(path: Path, obj) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


# --------------------------------------------------------------------------
# problem construction
# --------------------------------------------------------------------------

def _load_file_pair(spec: str):
    """``file:<dir>`` (holding A.txt and B.txt) or ``file:<a>,<b>``."""
    target = spec[len("file:"):]
    if "," in target:
        pa, pb = (Path(p) for p in target.split(",", 1))
    else:
        pa, pb = Path(target) / "A.txt", Path(target) / "B.txt"
    for p in (pa, pb):
        if not p.is_file():
            raise UsageError(f"matrix file not found: {p}")
    raw = pa.read_bytes() + pb.read_bytes()
    return read_matrix(pa), read_matrix(pb), raw


def build_problem(args):
    """Returns ``(A, B, problem, fingerprint_bytes, extras)``; ``extras`` feeds the summary."""
    kind = args.problem
    rng = data_rng(args.seed)
    extras = {}
    if kind.startswith("file:"):
        A, B, raw = _load_file_pair(kind)
        return A, B, raw_spd_problem(A, B, args.noise), raw, extras
    if kind == "random":
        k = args.k
        A, B, _ = generate_random_gep(args.dim, k, args.eigengap, args.cond_b, rng)
        return A, B, raw_spd_problem(A, B, args.noise), A.tobytes() + B.tobytes(), extras
    if kind == "ica":
        if args.data:
            X, _ = read_paired_csv(args.data)
            raw = Path(args.data).read_bytes()
        else:
            spec = SignalSpec.from_json(Path(args.signal_spec).read_text()) if args.signal_spec else SignalSpec()
            sources, X = generate_mixed_signals(spec, rng)
            extras["sources"] = sources
            raw = X.tobytes()
        problem = ica_problem(X)
        extras["observations"] = X - X.mean(axis=0)
        A, B = problem.exact
        return A, B, problem, raw, extras
    if kind == "cca":
        if args.data:
            X, Y = read_paired_csv(args.data, args.dx)
            if Y is None:
                raise UsageError("cca data needs both x and y columns")
            data = PairedDataset.from_arrays(X, Y)
            raw = Path(args.data).read_bytes()
        else:
            corrs = [float(c) for c in args.corrs.split(",")]
            data = generate_correlated_views(args.n, args.dx or 4, args.dy, corrs, rng)
            raw = data.X.tobytes() + data.Y.tobytes()
        problem = cca_problem(data)
        A, B = problem.exact
        return A, B, problem, raw, extras
    raise UsageError(f"unknown --problem {kind!r}; use file:<path>, random, ica or cca")


def unmixing_correlations(V, Xc, sources):
    """Greedy matching of recovered components to sources by |correlation|."""
    comps = Xc @ V.T
    k, s = comps.shape[1], sources.shape[1]
    corr = np.abs(np.corrcoef(np.hstack([comps, sources]).T)[:k, k:])
    out = [None] * k
    free_c, free_s = set(range(k)), set(range(s))
    while free_c and free_s:
        c, j = max(((c, j) for c in free_c for j in free_s), key=lambda p: corr[p])
        out[c] = {"component": c, "source": j, "abs_correlation": float(corr[c, j])}
        free_c.discard(c)
        free_s.discard(j)
    return [o for o in out if o is not None]


# --------------------------------------------------------------------------
# solve
# --------------------------------------------------------------------------

def _config_from_args(args) -> SolverConfig:
    if args.config:
        return SolverConfig.from_json(Path(args.config).read_text())
    rho = args.rho
    if args.mode in ("stoch", "smooth"):
        if rho is None:
            print(RHO_WARNING.format(auto=DEFAULT_RHO), file=sys.stderr)
            raise UsageError("--rho is required in stochastic modes")
        if rho == "auto":
            print(
                f"warning: using rho = {DEFAULT_RHO:g}; it must not exceed the smallest eigenvalue of B",
                file=sys.stderr,
            )
            rho = DEFAULT_RHO
    elif rho in (None, "auto"):
        rho = 0.0
    try:
        rho = float(rho)
    except ValueError:
        raise UsageError(f"--rho must be a number or 'auto', got {args.rho!r}") from None
    return SolverConfig(
        k=args.k,
        iterations=args.iters,
        eta=args.eta,
        gamma=args.gamma,
        rho=rho,
        nu=args.nu,
        batch_size=args.batch,
        workers=args.workers,
        optimizer=Optimizer(kind=args.optimizer),
        seed=args.seed,
    )


def trajectory_csv(records) -> str:
    has_util = any(r.utility is not None for r in records)
    has_err = any(r.subspace_error is not None for r in records)
    cols = ["iter", "player", "rayleigh"] + (["utility"] if has_util else []) + (
        ["subspace_error"] if has_err else []
    )
    lines = [",".join(cols)]
    for r in records:
        for i, ray in enumerate(r.rayleigh):
            row = [str(r.iter), str(i), format_float(ray)]
            if has_util:
                row.append(format_float(r.utility[i]))
            if has_err:
                row.append(format_float(r.subspace_error))
            lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def cmd_solve(args) -> int:
    started = _now()
    cfg = _config_from_args(args)
    A, B, problem, raw, extras = build_problem(args)
    if cfg.k > A.shape[0]:
        raise ConfigInvalid(f"k={cfg.k} exceeds the problem dimension {A.shape[0]}")
    oracle = oracle_solve(A, B, cfg.k)
    if args.mode == "det":
        players, records = solve_deterministic(A, B, cfg, args.record_every, oracle=oracle)
    elif args.mode == "stoch":
        players, records = solve_stochastic(problem, cfg, oracle, args.record_every, mode=args.parallel_mode)
    else:
        players, records = solve_smooth_stochastic(problem, cfg, oracle, args.record_every, mode=args.parallel_mode)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out / "trajectory.csv", trajectory_csv(records))
    write_matrix(out / "final_vectors.txt", players.vhat)

    final = records[-1]
    summary = {
        "mode": args.mode,
        "problem": args.problem,
        "k": cfg.k,
        "dim": int(A.shape[0]),
        "iterations": cfg.iterations,
        "final_rayleigh": list(final.rayleigh),
        "oracle_eigenvalues": [float(x) for x in oracle.eigenvalues],
        "subspace_error": final.subspace_error,
        "backend": _backend.BACKEND,
    }
    if "sources" in extras:
        summary["unmixing"] = unmixing_correlations(players.vhat, extras["observations"], extras["sources"])
        summary["min_abs_correlation"] = min(m["abs_correlation"] for m in summary["unmixing"])
    _write_json(out / "summary.json", summary)

    outputs = ["trajectory.csv", "final_vectors.txt", "summary.json", "manifest.json"]
    manifest = {
        "command": "solve",
        "argv": list(args.argv),
        "config": cfg.to_dict(),
        "mode": args.mode,
        "problem": args.problem,
        "dataset_fingerprint": fingerprint(raw),
        "tool_version": __version__,
        "started": started,
        "finished": _now(),
        "outputs": outputs,
    }
    _write_json(out / "manifest.json", manifest)
    print(f"wrote {', '.join(outputs)} to {out}")
    if final.subspace_error is not None:
        print(f"final subspace error {final.subspace_error:.3e}")
    return EXIT_OK


# --------------------------------------------------------------------------
# curve
# --------------------------------------------------------------------------

def cmd_curve(args) -> int:
    if args.samples < 8:
        raise UsageError(f"--samples must be >= 8, got {args.samples}")
    A = read_matrix(args.a) if args.a else EXAMPLE_2X2_A
    B = read_matrix(args.b) if args.b else EXAMPLE_2X2_B
    if A.shape != (2, 2) or B.shape != (2, 2):
        raise UsageError(f"curve needs 2x2 matrices, got {A.shape} and {B.shape}")
    sol = oracle_solve(A, B, 2)
    parent = sol.eigenvectors[0]
    curve = utility_curve(args.samples, A, B, parent)
    lines = ["theta_deg,utility,rayleigh"]
    for theta, u in curve:
        v = np.array([np.cos(theta), np.sin(theta)])
        lines.append(f"{format_float(np.degrees(theta))},{format_float(u)},{format_float(generalized_rayleigh(v, A, B))}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out / "curve.csv", "\n".join(lines) + "\n")
    best = max(curve, key=lambda p: p[1])
    print(f"wrote {len(curve)} samples to {out / 'curve.csv'}; max utility {best[1]:.6g} at {np.degrees(best[0]):.2f} deg")
    return EXIT_OK


# --------------------------------------------------------------------------
# verify
# --------------------------------------------------------------------------

def cmd_verify(args) -> int:
    results = run_suite(args.suite, args.seed)
    print(format_table(results))
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} properties passed")
    return EXIT_PROPERTY if failed else EXIT_OK


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gepgame", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"gepgame {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="run a solver and write trajectory and vectors")
    s.add_argument("--mode", choices=("det", "stoch", "smooth"), default="det")
    s.add_argument("--problem", default="random", help="file:<dir>|file:<a>,<b>|random|ica|cca")
    s.add_argument("--config", help="SolverConfig JSON; overrides the solver flags")
    s.add_argument("--k", type=int, default=2)
    s.add_argument("--iters", type=int, default=1000)
    s.add_argument("--eta", default="const:0.1", help="const:<c>|harm:<c>|warmharm:<t_c>,<eta0>,<etaT>")
    s.add_argument("--gamma", default="const:1.0")
    s.add_argument("--rho", default=None, help="clipping floor, or 'auto'")
    s.add_argument("--nu", type=float, default=None, help="ceiling for the smooth mode")
    s.add_argument("--batch", type=int, default=1)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--parallel-mode", choices=MODES, default=PER_WORKER)
    s.add_argument("--optimizer", choices=("sgd", "adam"), default="sgd")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--record-every", type=int, default=0)
    s.add_argument("--out", default="out")
    g = s.add_argument_group("problem options")
    g.add_argument("--dim", type=int, default=10, help="dimension of a random problem")
    g.add_argument("--eigengap", type=float, default=0.1)
    g.add_argument("--cond-b", type=float, default=2.0)
    g.add_argument("--noise", type=float, default=0.0, help="estimate noise for matrix problems")
    g.add_argument("--data", help="CSV dataset for ica/cca")
    g.add_argument("--dx", type=int, default=None, help="x columns in a cca CSV")
    g.add_argument("--dy", type=int, default=3)
    g.add_argument("--n", type=int, default=20000, help="samples for generated cca views")
    g.add_argument("--corrs", default="0.9,0.6,0.3")
    g.add_argument("--signal-spec", help="SignalSpec JSON for generated ica data")
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("curve", help="export the second player's utility on the unit circle")
    c.add_argument("--samples", type=int, default=3600)
    c.add_argument("--a", help="2x2 matrix file for A")
    c.add_argument("--b", help="2x2 matrix file for B")
    c.add_argument("--out", default="out")
    c.set_defaults(func=cmd_curve)

    v = sub.add_parser("verify", help="run the randomized property suites")
    v.add_argument("--suite", choices=("fast", "full"), default="fast")
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_verify)
    return p


CONFIG_ERRORS = (UsageError, ConfigInvalid, DimensionMismatch, NotSymmetric, NotSpd, StreamExhausted, OSError, ValueError)
NUMERIC_ERRORS = (NonPositiveDenominator, NotConverged, RankDeficient, ArithmeticError)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        args.argv = argv
        return args.func(args)
    except NUMERIC_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
