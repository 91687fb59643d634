"""Reader and writer for the line-oriented problem file format.

Example::

    problem "ex1"
    evolve t
    domain t in [0, 1], x in [0, 1]
    degree t=16 x=16
    var u: seed = 1 + x ; rhs = -u_x + 2 + t + x
    correct u: pin x=0 to 1 + t
    exact = (1 + t)*(1 + x)
    iterations 1

Optional lines beyond the core set: ``sweep jacobi`` (evaluate every right-hand
side on the previous sweep only) and ``expand t=<real> x=<real>`` (expansion
point, default the domain midpoint).  ``#`` starts a comment.
"""

from __future__ import annotations

import re
from pathlib import Path

from .lang import ExprError, fold_constant, parse_expr, to_text
from .model import Correction, ProblemError, ProblemSpec, ShootingSpec, VarSpec

DEFAULT_DEGREE = 16


class ProblemFileError(ValueError):
    def __init__(self, lineno: int, message: str):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}")


_NAME = r"[A-Za-z_][A-Za-z0-9_]*"
_REAL = r"[^,\[\]]+"
_RE = {
    "problem": re.compile(r'problem\s+"([^"]*)"$'),
    "evolve": re.compile(r"evolve\s+([tx])$"),
    "domain": re.compile(
        rf"domain\s+t\s+in\s+\[({_REAL}),({_REAL})\]\s*,\s*x\s+in\s+\[({_REAL}),({_REAL})\]$"
    ),
    "degree": re.compile(r"degree\s+t\s*=\s*(\d+)\s+x\s*=\s*(\d+)$"),
    "expand": re.compile(r"expand\s+t\s*=\s*(\S+)\s+x\s*=\s*(\S+)$"),
    "sweep": re.compile(r"sweep\s+(\S+)$"),
    "const": re.compile(rf"const\s+({_NAME})\s*=\s*(.+)$"),
    "var": re.compile(rf"var\s+({_NAME})\s*:\s*seed\s*=\s*(.+?)\s*;\s*rhs\s*=\s*(.+)$"),
    "pin": re.compile(rf"correct\s+({_NAME})\s*:\s*pin\s+([tx])\s*=\s*(.+?)\s+to\s+(.+)$"),
    "blend": re.compile(
        rf"correct\s+({_NAME})\s*:\s*blend\s+([tx])\s+in\s+\[({_REAL}),({_REAL})\]\s+to\s+(.+)$"
    ),
    "shoot": re.compile(
        rf"shoot\s+({_NAME})\s*:\s*slope\s+of\s+({_NAME})\s+over\s+([tx])\s+in\s+"
        rf"\[({_REAL}),({_REAL})\]\s+targets\s+(.+)$"
    ),
    "exact": re.compile(r"exact\s*=\s*(.+)$"),
    "iterations": re.compile(r"iterations\s+(\d+)$"),
}


def _split_pair(text: str) -> tuple[str, str]:
    # expressions contain no commas, so the first top-level one separates the pair
    parts = text.split(",")
    if len(parts) != 2:
        raise ValueError(f"expected two comma-separated expressions, got {text!r}")
    return parts[0].strip(), parts[1].strip()


def parse_problem(text: str, defaults: dict | None = None) -> ProblemSpec:
    """Parse problem-file text into a validated :class:`ProblemSpec`."""
    lines = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append((lineno, line))

    constants: dict[str, float] = {}
    for lineno, line in lines:
        m = _RE["const"].match(line)
        if m:
            try:
                value = fold_constant(parse_expr(m.group(2), constants))
            except ExprError as exc:
                raise ProblemFileError(lineno, str(exc)) from None
            if value is None:
                raise ProblemFileError(lineno, f"constant {m.group(1)} must be numeric")
            constants[m.group(1)] = value

    fields: dict = {"constants": constants}
    vars_: list[VarSpec] = []
    corrections: list[Correction] = []
    lineno = 0

    def expr(s: str):
        try:
            return parse_expr(s.strip(), constants)
        except ExprError as exc:
            raise ProblemFileError(lineno, str(exc)) from None

    def real(s: str) -> float:
        v = fold_constant(expr(s))
        if v is None:
            raise ProblemFileError(lineno, f"expected a number, got {s.strip()!r}")
        return float(v)

    def once(key: str, value) -> None:
        if key in fields:
            raise ProblemFileError(lineno, f"duplicate {key!r} line")
        fields[key] = value

    for lineno, line in lines:
        if _RE["const"].match(line):
            continue
        keyword = line.split(None, 1)[0]
        try:
            if keyword == "problem" and (m := _RE["problem"].match(line)):
                once("name", m.group(1))
            elif keyword == "evolve" and (m := _RE["evolve"].match(line)):
                once("evolution_axis", m.group(1))
            elif keyword == "domain" and (m := _RE["domain"].match(line)):
                g = [real(s) for s in m.groups()]
                once("domain", {"t": (g[0], g[1]), "x": (g[2], g[3])})
            elif keyword == "degree" and (m := _RE["degree"].match(line)):
                once("degrees", (int(m.group(1)), int(m.group(2))))
            elif keyword == "expand" and (m := _RE["expand"].match(line)):
                once("center", {"t": real(m.group(1)), "x": real(m.group(2))})
            elif keyword == "sweep" and (m := _RE["sweep"].match(line)):
                once("sweep", m.group(1))
            elif keyword == "var" and (m := _RE["var"].match(line)):
                vars_.append(VarSpec(m.group(1), expr(m.group(2)), expr(m.group(3))))
            elif keyword == "correct" and (m := _RE["pin"].match(line)):
                corrections.append(
                    Correction(m.group(1), "pin", m.group(2), (real(m.group(3)),), (expr(m.group(4)),))
                )
            elif keyword == "correct" and (m := _RE["blend"].match(line)):
                ga, gb = _split_pair(m.group(5))
                corrections.append(
                    Correction(
                        m.group(1), "blend", m.group(2),
                        (real(m.group(3)), real(m.group(4))), (expr(ga), expr(gb)),
                    )
                )
            elif keyword == "shoot" and (m := _RE["shoot"].match(line)):
                ga, gb = _split_pair(m.group(6))
                once(
                    "shooting",
                    ShootingSpec(
                        m.group(1), m.group(2), m.group(3),
                        (real(m.group(4)), real(m.group(5))), (expr(ga), expr(gb)),
                    ),
                )
            elif keyword == "exact" and (m := _RE["exact"].match(line)):
                once("exact", expr(m.group(1)))
            elif keyword == "iterations" and (m := _RE["iterations"].match(line)):
                once("iterations", int(m.group(1)))
            else:
                raise ProblemFileError(lineno, f"cannot parse {line!r}")
        except ValueError as exc:
            if isinstance(exc, ProblemFileError):
                raise
            raise ProblemFileError(lineno, str(exc)) from None

    for key in ("name", "evolution_axis", "domain"):
        if key not in fields:
            raise ProblemFileError(0, f"missing required {key.replace('_', ' ')!r} line")
    defaults = defaults or {}
    fields.setdefault("degrees", defaults.get("degrees", (DEFAULT_DEGREE, DEFAULT_DEGREE)))
    fields.setdefault("iterations", defaults.get("iterations", 4))
    spec = ProblemSpec(vars=tuple(vars_), corrections=tuple(corrections), **fields)
    try:
        return spec.validate()
    except ProblemError as exc:
        raise ProblemFileError(0, str(exc)) from None


def _num(v: float) -> str:
    return repr(float(v)).removesuffix(".0")


def format_problem(spec: ProblemSpec, comment: str | None = None) -> str:
    """Canonical text for ``spec``; ``parse_problem`` of it rebuilds an equal spec."""
    out = []
    if comment:
        out += [f"# {line}".rstrip() for line in comment.splitlines()]
    (t0, t1), (x0, x1) = spec.domain["t"], spec.domain["x"]
    out.append(f'problem "{spec.name}"')
    out.append(f"evolve {spec.evolution_axis}")
    out.append(f"domain t in [{_num(t0)}, {_num(t1)}], x in [{_num(x0)}, {_num(x1)}]")
    out.append(f"degree t={spec.degrees[0]} x={spec.degrees[1]}")
    if spec.sweep != "gauss-seidel":
        out.append(f"sweep {spec.sweep}")
    if spec.center is not None:
        out.append(f"expand t={_num(spec.center['t'])} x={_num(spec.center['x'])}")
    for name, value in spec.constants.items():
        out.append(f"const {name} = {_num(value)}")
    for v in spec.vars:
        out.append(f"var {v.name}: seed = {to_text(v.seed)} ; rhs = {to_text(v.rhs)}")
    for c in spec.corrections:
        if c.kind == "pin":
            out.append(f"correct {c.target_var}: pin {c.axis}={_num(c.points[0])} to {to_text(c.targets[0])}")
        else:
            out.append(
                f"correct {c.target_var}: blend {c.axis} in [{_num(c.points[0])}, {_num(c.points[1])}] "
                f"to {to_text(c.targets[0])}, {to_text(c.targets[1])}"
            )
    sh = spec.shooting
    if sh is not None:
        out.append(
            f"shoot {sh.slope_var}: slope of {sh.primary_var} over {sh.axis} in "
            f"[{_num(sh.interval[0])}, {_num(sh.interval[1])}] targets "
            f"{to_text(sh.targets[0])}, {to_text(sh.targets[1])}"
        )
    if spec.exact is not None:
        out.append(f"exact = {to_text(spec.exact)}")
    out.append(f"iterations {spec.iterations}")
    return "\n".join(out) + "\n"


def load_problem(path: str | Path, defaults: dict | None = None) -> ProblemSpec:
    return parse_problem(Path(path).read_text(), defaults)
