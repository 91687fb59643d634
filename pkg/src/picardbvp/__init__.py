"""Picard iteration with boundary corrections for PDE boundary value problems,
carried out in truncated bivariate power series."""

from .engine import PicardSolver, RunReport, SolveError, run
from .lang import parse_expr
from .model import Correction, ProblemSpec, ShootingSpec, VarSpec
from .problemfile import format_problem, load_problem, parse_problem
from .problems import builtin_keys, load_builtin
from .report import convergence_table, error_grid
from .series import Frame, Series1, Series2

__all__ = [
    "Correction",
    "Frame",
    "PicardSolver",
    "ProblemSpec",
    "RunReport",
    "Series1",
    "Series2",
    "ShootingSpec",
    "SolveError",
    "VarSpec",
    "builtin_keys",
    "convergence_table",
    "error_grid",
    "format_problem",
    "load_builtin",
    "load_problem",
    "parse_expr",
    "parse_problem",
    "run",
]
