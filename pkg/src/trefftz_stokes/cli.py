"""Command-line entry point: single solves, convergence studies and dimension checks.

Exit codes: 0 success, 2 invalid configuration, 3 solver failure,
4 dimension-check mismatch.
"""

from __future__ import annotations

import argparse
import io
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analysis import ErrorReport, error_report
from .mesh import build_structured_mesh
from .problems import PROBLEMS, get_problem, with_zero_data
from .solver import SolverError, solve_dg, solve_trefftz
from .stokes_dg import DGSpace, assemble_system, default_alpha, write_coordinate_matrix
from .trefftz import RankError, assemble_local_W, build_embedding, dim_counts, dim_formulas, local_kernel

log = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_DIMS = 0, 2, 3, 4
METHODS = ("dg", "trefftz")
CSV_HEADER = (
    "method,k,nu,n,h,ndof_full,ndof_condensed,ul2error,pl2error,"
    "u1h_error,p0h_error,momentum_residual,div_residual"
)
GALERKIN_TOL = 1e-9
ALGEBRAIC_TOL = 1e-10


class ConfigError(ValueError):
    pass


class RunFailure(RuntimeError):
    def __init__(self, method, k, n, reason):
        super().__init__(f"{method} k={k} n={n}: {reason}")
        self.method, self.k, self.n = method, k, n


@dataclass
class RunConfig:
    methods: tuple = METHODS
    ks: tuple = (2,)
    levels: tuple = (2, 4, 8, 16)
    nu: float = 1.0
    alpha_scale: float = 10.0
    problem: str = "manufactured"
    zero_data: bool = False
    out: str | None = None
    dump_matrix: str | None = None
    dump_kernel_dims: str | None = None

    def validate(self):
        if not self.methods or any(m not in METHODS for m in self.methods):
            raise ConfigError(f"methods must be a subset of {METHODS}, got {self.methods}")
        if not self.ks or any(not 1 <= k <= 4 for k in self.ks):
            raise ConfigError(f"k must lie in 1..4, got {self.ks}")
        if not self.levels or any(n < 1 for n in self.levels):
            raise ConfigError(f"levels must be positive integers, got {self.levels}")
        if any(a >= b for a, b in zip(self.levels, self.levels[1:])):
            raise ConfigError(f"levels must be strictly increasing, got {self.levels}")
        if not self.nu > 0:
            raise ConfigError(f"nu must be positive, got {self.nu}")
        if not self.alpha_scale > 0:
            raise ConfigError(f"alpha scale must be positive, got {self.alpha_scale}")
        if self.problem not in PROBLEMS:
            raise ConfigError(f"unknown problem {self.problem!r}; choose from {sorted(PROBLEMS)}")
        return self


@dataclass
class RunResult:
    report: ErrorReport
    algebraic_residual: float
    galerkin_residual: float
    space: DGSpace
    solution: object
    system: object
    embedding: object = None


def _problem(config: RunConfig):
    prob = get_problem(config.problem, config.nu)
    return with_zero_data(prob) if config.zero_data else prob


def _suffixed(path: str, method: str, k: int, n: int) -> Path:
    p = Path(path)
    return p.with_name(f"{p.stem}_{method}_k{k}_n{n}{p.suffix}")


def run_single(config: RunConfig, method: str, k: int, n: int, suffix_dumps: bool = False) -> RunResult:
    """Assemble and solve one (method, k, n) case and measure its errors."""
    problem = _problem(config)
    space = DGSpace(build_structured_mesh(n), k)
    alpha = default_alpha(k, config.alpha_scale)
    system = assemble_system(space, problem, nu=config.nu, alpha=alpha)
    emb = None
    try:
        if method == "dg":
            sol = solve_dg(system, space)
            gal = sol.residual
            ndof_condensed = system.matrix.shape[0]
        else:
            emb = build_embedding(space, problem.f, problem.g, nu=config.nu)
            sol = solve_trefftz(system, space, emb)
            gal = sol.galerkin_residual
            ndof_condensed = emb.ndof + 1
    except (SolverError, RankError) as exc:
        raise RunFailure(method, k, n, str(exc)) from exc
    if sol.residual >= ALGEBRAIC_TOL or gal >= GALERKIN_TOL:
        raise RunFailure(method, k, n, f"residual contract violated: algebraic={sol.residual:.3e} galerkin={gal:.3e}")

    if config.dump_matrix:
        path = _suffixed(config.dump_matrix, method, k, n) if suffix_dumps else Path(config.dump_matrix)
        write_coordinate_matrix(path, system.matrix)
    if config.dump_kernel_dims and emb is not None:
        path = _suffixed(config.dump_kernel_dims, method, k, n) if suffix_dumps else Path(config.dump_kernel_dims)
        write_kernel_dims(path, emb)

    report = error_report(space, sol, problem, config.nu, n, system.matrix.shape[0], ndof_condensed)
    return RunResult(report, sol.residual, gal, space, sol, system, emb)


def write_kernel_dims(path, emb) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write("element_id,rank,kernel_dim\n")
        for e, (rank, dim) in enumerate(zip(emb.ranks, emb.kernel_dims)):
            fh.write(f"{e},{rank},{dim}\n")


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.17g}"


def csv_row(r: ErrorReport) -> str:
    fields = (
        r.method, r.k, r.nu, r.n, r.h, r.ndof_full, r.ndof_condensed, r.u_l2, r.p_l2,
        r.u_1h, r.p_0h, r.trefftz_momentum_residual, r.div_residual,
    )
    return ",".join(v if isinstance(v, str) else _fmt(v) for v in fields)


def render_csv(reports) -> str:
    rows = sorted(reports, key=lambda r: (r.method, r.k, r.n))
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for r in rows:
        buf.write(csv_row(r) + "\n")
    return buf.getvalue()


def cmd_convergence(config: RunConfig) -> list[RunResult]:
    """Run every (method, k, n) of ``config`` and write the CSV to ``config.out`` (or stdout)."""
    config.validate()
    results = []
    for method in config.methods:
        for k in config.ks:
            for n in config.levels:
                res = run_single(config, method, k, n, suffix_dumps=True)
                log.info("%s k=%d n=%d u_l2=%.3e p_l2=%.3e", method, k, n, res.report.u_l2, res.report.p_l2)
                results.append(res)
    text = render_csv([r.report for r in results])
    if config.out:
        with open(config.out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return results


def check_dims(k_max: int = 6, numeric_k_max: int = 4, n: int = 2):
    """Table of closed-form and counted local dimensions, plus numerical kernel checks.

    Returns (lines, mismatches).
    """
    if not 1 <= k_max <= 6:
        raise ConfigError(f"k_max must lie in 1..6, got {k_max}")
    lines, mismatches = [], []
    for d in (2, 3):
        xs, ts = [], []
        for k in range(1, k_max + 1):
            closed = dim_formulas(k, d)
            counted = dim_counts(k, d)
            if closed != counted:
                mismatches.append(f"d={d} k={k}: closed form {closed} != counted {counted}")
            xs.append(closed[0])
            ts.append(closed[1])
        lines.append(f"d={d} dim X_h(T): " + " ".join(map(str, xs)))
        lines.append(f"d={d} dim T(T):   " + " ".join(map(str, ts)))

    mesh = build_structured_mesh(n)
    for k in range(1, min(k_max, numeric_k_max) + 1):
        space = DGSpace(mesh, k)
        expected = dim_formulas(k, 2)[1]
        dims, gaps = [], []
        for e in range(mesh.num_elements):
            ker = local_kernel(assemble_local_W(space, e))
            dims.append(ker.kernel_dim)
            gaps.append(ker.gap)
        bad = [e for e, dim in enumerate(dims) if dim != expected]
        if bad:
            mismatches.append(f"d=2 k={k}: numerical kernel dims {sorted(set(dims))} != {expected} on elements {bad}")
        lines.append(f"d=2 k={k} numerical kernel dim on n={n}: {sorted(set(dims))} (expected {expected}), min gap {min(gaps):.3e}")
    return lines, mismatches


def _int_list(text: str) -> tuple:
    try:
        return tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _methods(text: str) -> tuple:
    if text == "both":
        return METHODS
    return tuple(t.strip() for t in text.split(",") if t.strip())


def _add_run_flags(p, default_method):
    p.add_argument("--method", type=_methods, default=_methods(default_method), help="dg, trefftz or both")
    p.add_argument("--k", type=_int_list, default=(2,), help="velocity degree(s), comma separated")
    p.add_argument("--nu", type=float, default=1.0)
    p.add_argument("--alpha-scale", type=float, default=10.0, help="penalty = alpha_scale * k^2")
    p.add_argument("--problem", default="manufactured", help=f"one of {', '.join(sorted(PROBLEMS))}")
    p.add_argument("--zero-data", action="store_true", help="solve with f = g = u_D = 0, measure against the problem")
    p.add_argument("--dump-matrix", metavar="PATH", help="write the bordered system matrix in coordinate format")
    p.add_argument("--dump-kernel-dims", metavar="PATH", help="write per-element constraint rank and kernel size")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trefftz-stokes", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="single solve, prints key=value lines")
    _add_run_flags(p, "trefftz")
    p.add_argument("--n", type=int, default=4, help="mesh resolution")

    p = sub.add_parser("convergence", help="convergence study written as CSV")
    _add_run_flags(p, "both")
    p.add_argument("--levels", type=_int_list, default=(2, 4, 8, 16))
    p.add_argument("--out", metavar="PATH", help="CSV path (default stdout)")

    p = sub.add_parser("check-dims", help="local space dimensions, closed form and numerical")
    p.add_argument("--k-max", type=int, default=6)
    return parser


def _config_from_args(args, levels) -> RunConfig:
    return RunConfig(
        methods=args.method,
        ks=args.k,
        levels=levels,
        nu=args.nu,
        alpha_scale=args.alpha_scale,
        problem=args.problem,
        zero_data=args.zero_data,
        out=getattr(args, "out", None),
        dump_matrix=args.dump_matrix,
        dump_kernel_dims=args.dump_kernel_dims,
    ).validate()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "check-dims":
            lines, mismatches = check_dims(args.k_max)
            print("\n".join(lines))
            for m in mismatches:
                print(f"MISMATCH {m}", file=sys.stderr)
            return EXIT_DIMS if mismatches else EXIT_OK
        if args.command == "solve":
            config = _config_from_args(args, (args.n,))
            if len(config.methods) != 1 or len(config.ks) != 1:
                raise ConfigError("solve takes a single method and a single k")
            res = run_single(config, config.methods[0], config.ks[0], args.n)
            for key, value in res.report.as_dict().items():
                print(f"{key}={value if isinstance(value, str) else _fmt(value)}")
            print(f"algebraic_residual={_fmt(res.algebraic_residual)}")
            print(f"galerkin_residual={_fmt(res.galerkin_residual)}")
            return EXIT_OK
        config = _config_from_args(args, args.levels)
        cmd_convergence(config)
        return EXIT_OK
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RunFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
