"""Command-line driver.

    picardbvp solve builtin:ex1 --iterations 1
    picardbvp solve my.prob --grid 80 --csv --out errors.csv
    picardbvp suite --out results/
    picardbvp list
    picardbvp export problems/

Exit codes: 0 success, 1 usage error, 2 solve failure, 3 suite acceptance failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import series as S
from .engine import RunReport, SolveError, run
from .lang import ExprError, to_text
from .model import ProblemError, ProblemSpec
from .problemfile import ProblemFileError, load_problem
from .problems import BuiltinEntry, builtin_keys, load_builtin, write_problem_files
from .report import ConvergenceRow, ErrorGrid, GridError, convergence_table, error_grid

EXIT_OK, EXIT_USAGE, EXIT_SOLVE, EXIT_SUITE = 0, 1, 2, 3
DEFAULT_GRID = 50


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad arguments; 2 is reserved for solve failures here
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="picardbvp", description="Picard iteration for PDE boundary value problems.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log every sweep")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    solve = sub.add_parser("solve", help="solve one problem file or builtin")
    solve.add_argument("target", help="path to a problem file, or builtin:<key>")
    solve.add_argument("--iterations", type=int, help="number of sweeps")
    solve.add_argument("--degree-t", type=int, help="truncation degree in t")
    solve.add_argument("--degree-x", type=int, help="truncation degree in x")
    solve.add_argument("--grid", type=int, default=DEFAULT_GRID, help="grid points per axis (default 50)")
    solve.add_argument("--out", type=Path, help="write the output here instead of standard output")
    solve.add_argument("--csv", action="store_true", help="emit the error grid as CSV instead of the report")

    suite = sub.add_parser("suite", help="run every builtin and check it")
    suite.add_argument("--out", type=Path, help="directory for one error-grid CSV per builtin")

    sub.add_parser("list", help="print the builtin keys")

    export = sub.add_parser("export", help="write every builtin as a problem file")
    export.add_argument("directory", type=Path)
    return parser


def resolve_target(target: str) -> tuple[ProblemSpec, BuiltinEntry | None]:
    if target.startswith("builtin:"):
        try:
            entry = load_builtin(target.removeprefix("builtin:"))
        except KeyError as exc:
            raise UsageError(exc.args[0]) from None
        return entry.spec, entry
    path = Path(target)
    if not path.is_file():
        raise UsageError(f"no such problem file: {target}")
    try:
        return load_problem(path), None
    except ProblemFileError as exc:
        raise UsageError(f"{target}: {exc}") from None


def apply_overrides(spec: ProblemSpec, iterations=None, degree_t=None, degree_x=None) -> ProblemSpec:
    deg_t, deg_x = spec.degrees
    spec = replace(
        spec,
        iterations=spec.iterations if iterations is None else iterations,
        degrees=(deg_t if degree_t is None else degree_t, deg_x if degree_x is None else degree_x),
    )
    try:
        return spec.validate()
    except ProblemError as exc:
        raise UsageError(str(exc)) from None


@dataclass
class Outcome:
    report: RunReport
    rows: list[ConvergenceRow]
    grid: ErrorGrid | None


def solve_spec(spec: ProblemSpec, n: int = DEFAULT_GRID) -> Outcome:
    """Run ``spec`` and grade it; any numerical failure surfaces as :class:`SolveError`."""
    try:
        report = run(spec)
        if spec.exact is None:
            return Outcome(report, [], None)
        rows = convergence_table(report, spec.exact, n)
        grid = error_grid(report.final[spec.primary], spec.exact, spec.domain, n, spec.expansion_point())
    except (ExprError, S.SeriesError, GridError, FloatingPointError) as exc:
        raise SolveError(str(exc)) from exc
    return Outcome(report, rows, grid)


def gamma_coefficients(spec: ProblemSpec, gamma: S.Series1) -> np.ndarray:
    """Coefficients of the slope polynomial in the physical coordinate."""
    axis = spec.seed_axis
    return gamma.recenter(-spec.expansion_point()[axis]).coeffs


def _poly_text(coeffs: np.ndarray, var: str, tol: float = 1e-14) -> str:
    terms = []
    for k, c in enumerate(coeffs):
        if abs(c) <= tol and k > 1:
            continue
        terms.append(f"{c:+.8g}" + ("" if k == 0 else f"*{var}" if k == 1 else f"*{var}^{k}"))
    return " ".join(terms) if terms else "0"


def format_report(spec: ProblemSpec, outcome: Outcome, entry: BuiltinEntry | None = None) -> str:
    rep = outcome.report
    c = spec.expansion_point()
    lines = [
        f"problem {spec.name}: {len(rep.sweeps)} sweep(s), {spec.sweep}, evolving in {spec.evolution_axis}",
        f"degrees t={spec.degrees[0]} x={spec.degrees[1]}, expansion point t={c['t']:g} x={c['x']:g}",
        f"truncated terms: {rep.truncated}",
    ]
    if outcome.rows:
        lines.append(f"{'sweep':>5}  {'max_abs':>12}  {'residual':>12}")
        lines += [f"{r.iteration:>5}  {r.max_abs:>12.4e}  {r.residual_norm:>12.4e}" for r in outcome.rows]
    else:
        lines.append(f"{'sweep':>5}  {'residual':>12}")
        lines += [f"{it.index:>5}  {it.residual_norm:>12.4e}" for it in rep.sweeps]
    g = outcome.grid
    if g is not None:
        at_t, at_x = g.argmax
        lines.append(f"exact: {to_text(spec.exact)}")
        lines.append(
            f"max_abs = {g.max_abs:.6e} at (t={at_t:g}, x={at_x:g}), mean_abs = {g.mean_abs:.6e}, "
            f"max_rel = {g.max_rel:.6e} on a {len(g.t)}x{len(g.x)} grid"
        )
    else:
        lines.append("no exact solution given; error not computed")
    if entry is not None and entry.reference_error is not None:
        lines.append(f"reference error: {entry.reference_error:g}")
    if rep.gamma is not None:
        lines.append(f"gamma({spec.seed_axis}) = {_poly_text(gamma_coefficients(spec, rep.gamma), spec.seed_axis)}")
    return "\n".join(lines) + "\n"


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def cmd_solve(args) -> int:
    spec, entry = resolve_target(args.target)
    spec = apply_overrides(spec, args.iterations, args.degree_t, args.degree_x)
    if args.grid < 2:
        raise UsageError(f"--grid needs at least 2 points, got {args.grid}")
    if args.csv and spec.exact is None:
        raise UsageError("--csv needs a problem with an exact solution")
    try:
        outcome = solve_spec(spec, args.grid)
    except SolveError as exc:
        print(f"solve failed: {exc}", file=sys.stderr)
        return EXIT_SOLVE
    _emit(outcome.grid.to_csv() if args.csv else format_report(spec, outcome, entry), args.out)
    return EXIT_OK


@dataclass
class SuiteRow:
    key: str
    sweeps: int
    max_abs: float
    reference: float | None
    passed: bool
    detail: str


def check_entry(entry: BuiltinEntry, n: int = DEFAULT_GRID) -> tuple[SuiteRow, Outcome | None]:
    spec = entry.spec
    try:
        outcome = solve_spec(spec, n)
    except SolveError as exc:
        return SuiteRow(entry.key, 0, float("nan"), entry.reference_error, False, f"error: {exc}"), None
    rows = outcome.rows
    final = rows[-1].max_abs
    acc = entry.acceptance
    checks = []
    if acc.max_abs is not None:
        lo, hi = acc.max_abs
        checks.append((bool(lo <= final <= hi), f"max_abs in [{lo:g}, {hi:g}]"))
    if acc.decreasing:
        ok = len(rows) >= 3 and final < rows[1].max_abs
        checks.append((ok, "sweep-%d error below sweep-2 error" % len(rows)))
    passed = all(ok for ok, _ in checks)
    detail = "; ".join(("" if ok else "not ") + what for ok, what in checks)
    return SuiteRow(entry.key, len(rows), final, entry.reference_error, passed, detail), outcome


def cmd_suite(args) -> int:
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
    rows = []
    print(f"{'key':<18} {'sweeps':>6} {'max_abs':>12} {'reference':>10}  result")
    for key in builtin_keys():
        row, outcome = check_entry(load_builtin(key))
        rows.append(row)
        ref = "-" if row.reference is None else f"{row.reference:g}"
        verdict = "pass" if row.passed else "FAIL"
        print(f"{row.key:<18} {row.sweeps:>6} {row.max_abs:>12.4e} {ref:>10}  {verdict}  ({row.detail})")
        if args.out is not None and outcome is not None and outcome.grid is not None:
            (args.out / f"{key}.csv").write_text(outcome.grid.to_csv())
    failed = [r.key for r in rows if not r.passed]
    print(f"{len(rows) - len(failed)}/{len(rows)} passed" + (f"; failing: {', '.join(failed)}" if failed else ""))
    return EXIT_SUITE if failed else EXIT_OK


def cmd_list(args) -> int:
    for key in builtin_keys():
        print(key)
    return EXIT_OK


def cmd_export(args) -> int:
    for path in write_problem_files(args.directory):
        print(path)
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "suite": cmd_suite, "list": cmd_list, "export": cmd_export}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"picardbvp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
