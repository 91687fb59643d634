"""Error surfaces of a final iterate against an exact solution, and CSV output."""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from . import series as S
from .engine import RunReport
from .lang import Expr, ExprError, eval_numeric

REL_FLOOR = 1e-12


class GridError(ValueError):
    pass


@dataclass
class ErrorGrid:
    t: np.ndarray
    x: np.ndarray
    approx: np.ndarray
    exact: np.ndarray

    @property
    def abs_err(self) -> np.ndarray:
        return np.abs(self.approx - self.exact)

    @property
    def rel_err(self) -> np.ndarray:
        """Relative error; NaN where ``|exact| < 1e-12``."""
        mag = np.abs(self.exact)
        out = np.full_like(mag, np.nan)
        ok = mag >= REL_FLOOR
        out[ok] = self.abs_err[ok] / mag[ok]
        return out

    @property
    def max_abs(self) -> float:
        return float(self.abs_err.max())

    @property
    def mean_abs(self) -> float:
        return float(self.abs_err.mean())

    @property
    def max_rel(self) -> float:
        rel = self.rel_err
        return float(np.nanmax(rel)) if np.any(~np.isnan(rel)) else float("nan")

    @property
    def argmax(self) -> tuple[float, float]:
        i, j = np.unravel_index(np.argmax(self.abs_err), self.abs_err.shape)
        return float(self.t[i]), float(self.x[j])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,x,approx,exact,abs_err,rel_err\n")
        abs_err, rel_err = self.abs_err, self.rel_err
        for i, tv in enumerate(self.t):
            for j, xv in enumerate(self.x):
                rel = "" if np.isnan(rel_err[i, j]) else f"{rel_err[i, j]:.17g}"
                buf.write(
                    f"{tv:.17g},{xv:.17g},{self.approx[i, j]:.17g},{self.exact[i, j]:.17g},"
                    f"{abs_err[i, j]:.17g},{rel}\n"
                )
        return buf.getvalue()


def error_grid(
    final: S.Series2,
    exact: Expr,
    domain: dict[str, tuple[float, float]],
    n: int = 50,
    center: dict[str, float] | None = None,
) -> ErrorGrid:
    """Sample ``final`` and ``exact`` on a uniform ``n x n`` grid of the closed domain.

    ``center`` is the physical expansion point of ``final``; the domain
    midpoint when omitted.
    """
    if n < 2:
        raise GridError(f"grid needs at least 2 points per axis, got {n}")
    if center is None:
        center = {ax: 0.5 * (lo + hi) for ax, (lo, hi) in domain.items()}
    ts = np.linspace(*domain["t"], n)
    xs = np.linspace(*domain["x"], n)
    approx = S.eval_grid(final, ts - center["t"], xs - center["x"])
    tt, xx = np.meshgrid(ts, xs, indexing="ij")
    try:
        ex = eval_numeric(exact, tt, xx)
    except ExprError:
        # locate the first offending cell for the message
        for i, tv in enumerate(ts):
            for j, xv in enumerate(xs):
                try:
                    eval_numeric(exact, tv, xv)
                except ExprError as exc:
                    raise GridError(f"exact solution fails at t={tv:g}, x={xv:g}: {exc}") from exc
        raise
    ex = np.broadcast_to(ex, approx.shape).astype(float)
    return ErrorGrid(ts, xs, approx, ex)


@dataclass(frozen=True)
class ConvergenceRow:
    iteration: int
    max_abs: float
    residual_norm: float


def convergence_table(report: RunReport, exact: Expr, n: int = 50) -> list[ConvergenceRow]:
    """One row per sweep: error of the graded variable and the boundary residual removed."""
    if not report.sweeps:
        raise GridError("no sweeps to tabulate")
    p = report.problem
    center = p.expansion_point()
    rows = []
    for it in report.sweeps:
        g = error_grid(it.state[p.primary], exact, p.domain, n, center)
        rows.append(ConvergenceRow(it.index, g.max_abs, it.residual_norm))
    return rows
