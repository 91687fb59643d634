"""Picard iteration with boundary corrections and slope shooting.

One sweep replaces every variable by ``seed + integral(rhs)`` along the
evolution axis, then applies the problem's corrections in order so that the
boundary data hold exactly, then (if the problem shoots) re-estimates the
unknown initial slope from the two-point data.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import series as S
from .lang import ExprError, eval_rhs, expand_seed
from .model import Correction, ProblemSpec, ShootingSpec
from .series import Frame, Series1, Series2

log = logging.getLogger(__name__)


class SolveError(RuntimeError):
    """A sweep could not be carried out; the message names the sweep and variable."""


@dataclass
class Iterate:
    """Variables after a sweep (or the seeds, for sweep 0)."""

    index: int
    state: dict[str, Series2]
    gamma: Series1 | None = None
    residuals: dict[str, float] = field(default_factory=dict)
    truncated: int = 0

    @property
    def residual_norm(self) -> float:
        return max(self.residuals.values(), default=0.0)


@dataclass
class RunReport:
    problem: ProblemSpec
    history: list[Iterate]

    @property
    def final(self) -> dict[str, Series2]:
        return self.history[-1].state

    @property
    def sweeps(self) -> list[Iterate]:
        return self.history[1:]

    @property
    def truncated(self) -> int:
        return sum(it.truncated for it in self.history)

    @property
    def gamma(self) -> Series1 | None:
        return self.history[-1].gamma


def _correction_label(c: Correction, k: int) -> str:
    where = ",".join(f"{p:g}" for p in c.points)
    return f"{k}:{c.target_var}@{c.axis}={where}"


class PicardSolver:
    """Caches the expanded seeds and boundary data of one problem."""

    def __init__(self, problem: ProblemSpec):
        self.problem = problem.validate()
        self.frame: Frame = problem.frame()
        self.evolve = problem.evolution_axis
        self.seed_axis = problem.seed_axis
        self.rhs_table = {v.name: v.rhs for v in problem.vars}
        self.lower = self.frame.local(self.evolve, problem.domain[self.evolve][0])
        self.seeds = {v.name: self._lift_data(v.seed, self.seed_axis, f"seed of {v.name}")
                      for v in problem.vars}
        self.targets = [
            [self._expand(g, c.trace_axis, f"target of correction {k}") for g in c.targets]
            for k, c in enumerate(problem.corrections)
        ]
        sh = problem.shooting
        if sh is not None:
            alpha, beta = (self._expand(g, self.seed_axis, "shooting target") for g in sh.targets)
            self.shoot_alpha, self.shoot_beta = alpha, beta
            a, b = sh.interval
            # the slope variable starts from the straight line through the two targets
            self.seeds[sh.slope_var] = self.frame.lift((beta - alpha) * (1.0 / (b - a)))

    def _expand(self, e, axis: str, what: str) -> Series1:
        f = self.frame
        try:
            return expand_seed(e, axis, f.deg(axis), f.center(axis))
        except (ExprError, S.SeriesError) as exc:
            raise SolveError(f"{what}: {exc}") from exc

    def _lift_data(self, e, axis: str, what: str) -> Series2:
        return self.frame.lift(self._expand(e, axis, what))

    # -- corrections -------------------------------------------------------

    def correct(self, k: int, s: Series2) -> tuple[Series2, float]:
        """Apply correction ``k`` to ``s``; also return the residual it removed."""
        c = self.problem.corrections[k]
        f = self.frame
        if c.kind == "pin":
            trace = S.eval_axis(s, c.axis, f.local(c.axis, c.points[0]))
            resid = trace - self.targets[k][0]
            return s - f.lift(resid), float(np.max(np.abs(resid.coeffs)))
        pa, pb = c.points
        ra = S.eval_axis(s, c.axis, f.local(c.axis, pa)) - self.targets[k][0]
        rb = S.eval_axis(s, c.axis, f.local(c.axis, pb)) - self.targets[k][1]
        y = f.var(c.axis)
        weight_b = (y - pa) * (1.0 / (pb - pa))
        weight_a = (pb - y) * (1.0 / (pb - pa))
        out = s - weight_b * f.lift(rb) - weight_a * f.lift(ra)
        return out, float(max(np.max(np.abs(ra.coeffs)), np.max(np.abs(rb.coeffs))))

    # -- shooting ------------------------------------------------------------

    def shooting_update(self, state: dict[str, Series2]) -> Series1:
        """New initial slope from ``u(b) = u(a) + slope*(b-a) + int_a^b (b-s) G(s) ds``."""
        sh: ShootingSpec = self.problem.shooting
        f = self.frame
        a, b = sh.interval
        g = eval_rhs(self.rhs_table[sh.slope_var], state, self.evolve, self.rhs_table, f)
        moment = S.integrate((b - f.var(sh.axis)) * g, sh.axis, f.local(sh.axis, a))
        integral = S.eval_axis(moment, sh.axis, f.local(sh.axis, b))
        return (self.shoot_beta - self.shoot_alpha - integral) * (1.0 / (b - a))

    # -- sweeps --------------------------------------------------------------

    def seed_state(self) -> Iterate:
        state = dict(self.seeds)
        it = Iterate(0, state)
        if self.problem.shooting is not None:
            it.gamma = self.shooting_update(state)
        return it

    def sweep(self, prev: Iterate) -> Iterate:
        p = self.problem
        f = self.frame
        sh = p.shooting
        new: dict[str, Series2] = {}
        with S.track_truncation() as drops:
            for v in p.vars:
                env = prev.state if p.sweep == "jacobi" else {**prev.state, **new}
                seed = self.seeds[v.name]
                if sh is not None and v.name == sh.slope_var and prev.gamma is not None:
                    seed = f.lift(prev.gamma)
                try:
                    g = eval_rhs(v.rhs, env, self.evolve, self.rhs_table, f)
                except (ExprError, S.SeriesError) as exc:
                    raise SolveError(f"sweep {prev.index + 1}, variable {v.name!r}: {exc}") from exc
                new[v.name] = seed + S.integrate(g, self.evolve, self.lower)
            residuals = {}
            for k, c in enumerate(p.corrections):
                new[c.target_var], residuals[_correction_label(c, k)] = self.correct(k, new[c.target_var])
            gamma = None
            if sh is not None:
                try:
                    gamma = self.shooting_update(new)
                except (ExprError, S.SeriesError) as exc:
                    raise SolveError(f"sweep {prev.index + 1}, shooting update: {exc}") from exc
        it = Iterate(prev.index + 1, new, gamma, residuals, drops.count)
        log.debug("sweep %d: residual %.3e, %d terms truncated", it.index, it.residual_norm, it.truncated)
        return it

    def run(self, iterations: int | None = None) -> RunReport:
        n = self.problem.iterations if iterations is None else iterations
        if n < 1:
            raise SolveError(f"iterations must be at least 1, got {n}")
        with S.track_truncation() as drops:
            history = [self.seed_state()]
        history[0].truncated = drops.count
        for _ in range(n):
            history.append(self.sweep(history[-1]))
        return RunReport(self.problem, history)


# module-level entry points -------------------------------------------------


def seed_state(p: ProblemSpec) -> dict[str, Series2]:
    return PicardSolver(p).seed_state().state


def picard_sweep(p: ProblemSpec, state: dict[str, Series2], gamma: Series1 | None = None) -> dict[str, Series2]:
    """One sweep from ``state``; pass ``gamma`` to continue a shooting run."""
    solver = PicardSolver(p)
    if p.shooting is not None and gamma is None:
        gamma = solver.shooting_update(state)
    return solver.sweep(Iterate(0, dict(state), gamma)).state


def correct(c: Correction, s: Series2, p: ProblemSpec) -> Series2:
    if c not in p.corrections:
        p = replace(p, corrections=p.corrections + (c,))
    solver = PicardSolver(p)
    return solver.correct(p.corrections.index(c), s)[0]


def shooting_update(sh: ShootingSpec, state: dict[str, Series2], p: ProblemSpec) -> Series1:
    if p.shooting != sh:
        p = replace(p, shooting=sh)
    return PicardSolver(p).shooting_update(state)


def run(p: ProblemSpec, iterations: int | None = None) -> RunReport:
    return PicardSolver(p).run(iterations)
