"""Problem description types shared by the file format, the engine and the builtins."""

from __future__ import annotations

from dataclasses import dataclass, field

from .lang import DerivRef, Expr, free_axes, state_names, to_text, walk
from .series import Frame

SWEEP_MODES = ("gauss-seidel", "jacobi")


class ProblemError(ValueError):
    """A problem description is inconsistent."""


def other_axis(axis: str) -> str:
    return "x" if axis == "t" else "t"


@dataclass(frozen=True)
class VarSpec:
    name: str
    seed: Expr
    rhs: Expr


@dataclass(frozen=True)
class Correction:
    """Boundary correction applied to ``target_var`` after each sweep.

    ``pin`` enforces ``u = target`` on the line ``axis = points[0]``; ``blend``
    enforces two lines at once by subtracting the linear interpolant of both
    residuals.
    """

    target_var: str
    kind: str
    axis: str
    points: tuple[float, ...]
    targets: tuple[Expr, ...]

    @property
    def trace_axis(self) -> str:
        return other_axis(self.axis)


@dataclass(frozen=True)
class ShootingSpec:
    """Unknown initial slope of ``primary_var`` along ``axis``, updated every sweep."""

    slope_var: str
    primary_var: str
    axis: str
    interval: tuple[float, float]
    targets: tuple[Expr, Expr]


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    evolution_axis: str
    domain: dict[str, tuple[float, float]]
    degrees: tuple[int, int]
    constants: dict[str, float]
    vars: tuple[VarSpec, ...]
    corrections: tuple[Correction, ...] = ()
    shooting: ShootingSpec | None = None
    exact: Expr | None = None
    iterations: int = 4
    sweep: str = "gauss-seidel"
    center: dict[str, float] | None = field(default=None)

    @property
    def seed_axis(self) -> str:
        return other_axis(self.evolution_axis)

    @property
    def primary(self) -> str:
        """The variable graded against ``exact``: the first one declared."""
        return self.vars[0].name

    def var(self, name: str) -> VarSpec:
        for v in self.vars:
            if v.name == name:
                return v
        raise ProblemError(f"no variable named {name!r}")

    def expansion_point(self) -> dict[str, float]:
        if self.center is not None:
            return dict(self.center)
        return {ax: 0.5 * (lo + hi) for ax, (lo, hi) in self.domain.items()}

    def frame(self) -> Frame:
        c = self.expansion_point()
        return Frame(self.degrees[0], self.degrees[1], c["t"], c["x"])

    def validate(self) -> ProblemSpec:
        if self.evolution_axis not in ("t", "x"):
            raise ProblemError(f"evolution axis must be t or x, got {self.evolution_axis!r}")
        if set(self.domain) != {"t", "x"}:
            raise ProblemError("domain needs an interval for both t and x")
        for ax, (lo, hi) in self.domain.items():
            if not lo < hi:
                raise ProblemError(f"empty domain interval for {ax}: [{lo}, {hi}]")
        if min(self.degrees) < 1:
            raise ProblemError(f"truncation degrees must be at least 1, got {self.degrees}")
        if self.iterations < 1:
            raise ProblemError(f"iterations must be at least 1, got {self.iterations}")
        if self.sweep not in SWEEP_MODES:
            raise ProblemError(f"sweep must be one of {SWEEP_MODES}, got {self.sweep!r}")
        if not self.vars:
            raise ProblemError("a problem needs at least one variable")
        names = [v.name for v in self.vars]
        if len(set(names)) != len(names):
            raise ProblemError(f"duplicate variable names in {names}")
        declared = set(names)
        for v in self.vars:
            undeclared = state_names(v.rhs) - declared
            if undeclared:
                raise ProblemError(
                    f"right-hand side of {v.name!r} references undeclared {sorted(undeclared)}"
                )
            self._check_data(v.seed, self.seed_axis, f"seed of {v.name!r}")
        for c in self.corrections:
            if c.target_var not in declared:
                raise ProblemError(f"correction targets undeclared variable {c.target_var!r}")
            if c.kind not in ("pin", "blend"):
                raise ProblemError(f"unknown correction kind {c.kind!r}")
            want = 1 if c.kind == "pin" else 2
            if len(c.points) != want or len(c.targets) != want:
                raise ProblemError(f"{c.kind} correction needs {want} point(s) and target(s)")
            if c.kind == "blend" and c.points[0] == c.points[1]:
                raise ProblemError(f"degenerate blend on {c.axis}: both points are {c.points[0]}")
            lo, hi = self.domain[c.axis]
            for p in c.points:
                if not lo <= p <= hi:
                    raise ProblemError(f"correction point {c.axis}={p} lies outside [{lo}, {hi}]")
            for g in c.targets:
                self._check_data(g, c.trace_axis, f"correction target for {c.target_var!r}")
        sh = self.shooting
        if sh is not None:
            for n in (sh.slope_var, sh.primary_var):
                if n not in declared:
                    raise ProblemError(f"shooting references undeclared variable {n!r}")
            if sh.axis != self.evolution_axis:
                raise ProblemError("the shooting interval must lie along the evolution axis")
            a, b = sh.interval
            lo, hi = self.domain[sh.axis]
            if not (lo <= a < b <= hi):
                raise ProblemError(f"shooting interval [{a}, {b}] must lie inside [{lo}, {hi}]")
            if a != lo:
                raise ProblemError("the shooting interval must start where the evolution starts")
            for g in sh.targets:
                self._check_data(g, self.seed_axis, "shooting target")
        if self.exact is not None:
            if state_names(self.exact):
                raise ProblemError("the exact solution may only use t, x and constants")
        return self

    @staticmethod
    def _check_data(e: Expr, axis: str, what: str) -> None:
        if state_names(e) or any(isinstance(n, DerivRef) for n in walk(e)):
            raise ProblemError(f"{what} cannot reference state variables: {to_text(e)}")
        extra = free_axes(e) - {axis}
        if extra:
            raise ProblemError(f"{what} may only depend on {axis}: {to_text(e)}")
