"""Truncated power series in one and two variables.

Every function the solver touches is held as a dense array of Taylor
coefficients about a fixed expansion point.  A :class:`Series2` holds
``c[i, j]`` multiplying ``t**i * x**j`` with ``0 <= i <= deg_t`` and
``0 <= j <= deg_x``; a :class:`Series1` holds the coefficients of a single
variable.  Coordinates are *local*: the expansion point is the origin, and
callers shift physical values before evaluating.

Operations never mutate their operands.  Products and antiderivatives that
would create terms above the truncation orders silently drop them; wrap a
computation in :func:`track_truncation` to count how many were lost.
"""

from __future__ import annotations

import contextlib
import contextvars
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.signal import convolve2d

AXES = ("t", "x")

RECIP_TOL = 1e-12


class SeriesError(ValueError):
    """Base class for series algebra failures."""


class ShapeMismatchError(SeriesError):
    """Operands carry different truncation orders or axes."""


class SingularDivisionError(SeriesError):
    """Reciprocal of a series whose constant term vanishes."""


@dataclass
class TruncationLog:
    """Running count of nonzero coefficients dropped by truncation."""

    count: int = 0


_active_log: contextvars.ContextVar[TruncationLog | None] = contextvars.ContextVar(
    "picardbvp_truncation_log", default=None
)


@contextlib.contextmanager
def track_truncation() -> Iterator[TruncationLog]:
    log = TruncationLog()
    token = _active_log.set(log)
    try:
        yield log
    finally:
        _active_log.reset(token)


def _note_dropped(n: int) -> None:
    log = _active_log.get()
    if log is not None and n:
        log.count += int(n)


def _check_axis(axis: str) -> int:
    try:
        return AXES.index(axis)
    except ValueError:
        raise SeriesError(f"unknown axis {axis!r}; expected 't' or 'x'") from None


def _frozen(arr: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise SeriesError("series coefficients must be finite")
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------------------
# univariate kernels on raw coefficient arrays


def _recip1(a: np.ndarray) -> np.ndarray:
    r = np.zeros_like(a)
    r[0] = 1.0 / a[0]
    for n in range(1, len(a)):
        r[n] = -np.dot(a[1 : n + 1], r[n - 1 :: -1][:n]) / a[0]
    return r


def _mul1(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    full = np.convolve(a, b)
    _note_dropped(np.count_nonzero(full[len(a) :]))
    return full[: len(a)]


def _diff1(a: np.ndarray) -> np.ndarray:
    out = np.zeros_like(a)
    out[:-1] = a[1:] * np.arange(1, len(a))
    return out


def _integ1(a: np.ndarray) -> np.ndarray:
    # antiderivative vanishing at the origin
    out = np.zeros_like(a)
    out[1:] = a[:-1] / np.arange(1, len(a))
    _note_dropped(a[-1] != 0.0)
    return out


class Series1:
    """Truncated power series in one variable (``t`` or ``x``)."""

    __slots__ = ("coeffs", "axis")

    def __init__(self, coeffs: Sequence[float] | np.ndarray, axis: str = "x"):
        _check_axis(axis)
        arr = np.array(coeffs, dtype=float).reshape(-1)
        if arr.size == 0:
            raise SeriesError("a series needs at least one coefficient")
        self.coeffs = _frozen(arr)
        self.axis = axis

    @property
    def deg(self) -> int:
        return self.coeffs.size - 1

    @classmethod
    def constant(cls, value: float, deg: int, axis: str = "x") -> Series1:
        c = np.zeros(deg + 1)
        c[0] = value
        return cls(c, axis)

    @classmethod
    def variable(cls, deg: int, axis: str = "x", center: float = 0.0) -> Series1:
        """The coordinate function ``center + local`` truncated at ``deg``."""
        c = np.zeros(deg + 1)
        c[0] = center
        if deg >= 1:
            c[1] = 1.0
        return cls(c, axis)

    def _like(self, arr: np.ndarray) -> Series1:
        return Series1(arr, self.axis)

    def _coerce(self, other) -> np.ndarray:
        if isinstance(other, Series1):
            if other.axis != self.axis or other.deg != self.deg:
                raise ShapeMismatchError(
                    f"cannot combine series in {self.axis}^{self.deg} "
                    f"with series in {other.axis}^{other.deg}"
                )
            return other.coeffs
        c = np.zeros_like(self.coeffs)
        c[0] = float(other)
        return c

    def __add__(self, other) -> Series1:
        return self._like(self.coeffs + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other) -> Series1:
        return self._like(self.coeffs - self._coerce(other))

    def __rsub__(self, other) -> Series1:
        return self._like(self._coerce(other) - self.coeffs)

    def __neg__(self) -> Series1:
        return self._like(-self.coeffs)

    def __mul__(self, other) -> Series1:
        if isinstance(other, Series1):
            return self._like(_mul1(self.coeffs, self._coerce(other)))
        return self._like(self.coeffs * float(other))

    __rmul__ = __mul__

    def __truediv__(self, other) -> Series1:
        if isinstance(other, Series1):
            return self * other.recip()
        return self._like(self.coeffs / float(other))

    def __rtruediv__(self, other) -> Series1:
        return self.recip() * float(other)

    def __pow__(self, n: int) -> Series1:
        return _powi(self, n, Series1.constant(1.0, self.deg, self.axis))

    def recip(self, name: str = "series") -> Series1:
        if abs(self.coeffs[0]) <= RECIP_TOL:
            raise SingularDivisionError(
                f"cannot divide by {name}: constant term {self.coeffs[0]:.3g} is zero"
            )
        return self._like(_recip1(self.coeffs))

    def diff(self) -> Series1:
        return self._like(_diff1(self.coeffs))

    def integrate(self, lower: float = 0.0) -> Series1:
        out = _integ1(self.coeffs)
        if lower != 0.0:
            out[0] -= P.polyval(lower, out)
        return self._like(out)

    def __call__(self, value: float) -> float:
        return float(P.polyval(value, self.coeffs))

    def recenter(self, point: float) -> Series1:
        """Same polynomial, re-expanded about local coordinate ``point``."""
        moved = P.Polynomial(self.coeffs)(P.Polynomial([point, 1.0])).coef
        out = np.zeros_like(self.coeffs)
        out[: min(len(moved), len(out))] = moved[: len(out)]
        return self._like(out)

    def lift(self, deg_t: int, deg_x: int) -> Series2:
        """Embed into two variables, constant along the other axis."""
        c = np.zeros((deg_t + 1, deg_x + 1))
        if self.axis == "t":
            n = min(self.deg, deg_t) + 1
            c[:n, 0] = self.coeffs[:n]
        else:
            n = min(self.deg, deg_x) + 1
            c[0, :n] = self.coeffs[:n]
        return Series2(c)

    def __repr__(self) -> str:
        return f"Series1({self.axis}, {np.array2string(self.coeffs, precision=6)})"


# ---------------------------------------------------------------------------
# bivariate series


class Series2:
    """Truncated power series in ``(t, x)``.

    ``coeffs[i, j]`` multiplies ``t**i * x**j`` (local coordinates).
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: np.ndarray | Sequence[Sequence[float]]):
        arr = np.array(coeffs, dtype=float)
        if arr.ndim != 2 or 0 in arr.shape:
            raise SeriesError(f"Series2 needs a non-empty 2-D array, got shape {arr.shape}")
        self.coeffs = _frozen(arr)

    @property
    def deg_t(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def deg_x(self) -> int:
        return self.coeffs.shape[1] - 1

    @property
    def degrees(self) -> tuple[int, int]:
        return self.deg_t, self.deg_x

    @classmethod
    def zeros(cls, deg_t: int, deg_x: int) -> Series2:
        return cls(np.zeros((deg_t + 1, deg_x + 1)))

    @classmethod
    def constant(cls, value: float, deg_t: int, deg_x: int) -> Series2:
        c = np.zeros((deg_t + 1, deg_x + 1))
        c[0, 0] = value
        return cls(c)

    @classmethod
    def variable(cls, axis: str, deg_t: int, deg_x: int, center: float = 0.0) -> Series2:
        deg = deg_t if axis == "t" else deg_x
        return Series1.variable(deg, axis, center).lift(deg_t, deg_x)

    def _coerce(self, other) -> np.ndarray:
        if isinstance(other, Series2):
            if other.coeffs.shape != self.coeffs.shape:
                raise ShapeMismatchError(
                    f"truncation orders differ: {self.degrees} vs {other.degrees}"
                )
            return other.coeffs
        if isinstance(other, Series1):
            raise ShapeMismatchError("lift a Series1 before combining it with a Series2")
        c = np.zeros_like(self.coeffs)
        c[0, 0] = float(other)
        return c

    def __add__(self, other) -> Series2:
        return Series2(self.coeffs + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other) -> Series2:
        return Series2(self.coeffs - self._coerce(other))

    def __rsub__(self, other) -> Series2:
        return Series2(self._coerce(other) - self.coeffs)

    def __neg__(self) -> Series2:
        return Series2(-self.coeffs)

    def __mul__(self, other) -> Series2:
        if isinstance(other, Series2):
            return mul(self, other)
        if isinstance(other, Series1):
            raise ShapeMismatchError("lift a Series1 before combining it with a Series2")
        return Series2(self.coeffs * float(other))

    __rmul__ = __mul__

    def __truediv__(self, other) -> Series2:
        if isinstance(other, Series2):
            return mul(self, recip(other))
        return Series2(self.coeffs / float(other))

    def __rtruediv__(self, other) -> Series2:
        return recip(self) * float(other)

    def __pow__(self, n: int) -> Series2:
        return powi(self, n)

    def diff(self, axis: str) -> Series2:
        return diff(self, axis)

    def integrate(self, axis: str, lower: float = 0.0) -> Series2:
        return integrate(self, axis, lower)

    def eval_axis(self, axis: str, value: float) -> Series1:
        return eval_axis(self, axis, value)

    def __call__(self, t, x):
        return eval_point(self, t, x)

    def allclose(self, other: Series2, atol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.coeffs - self._coerce(other)), initial=0.0) <= atol)

    def __repr__(self) -> str:
        return f"Series2(deg_t={self.deg_t}, deg_x={self.deg_x})"


def mul(a: Series2, b: Series2) -> Series2:
    """Cauchy product truncated to the operands' common window."""
    bc = a._coerce(b)
    nt, nx = a.coeffs.shape
    full = convolve2d(a.coeffs, bc)
    _note_dropped(np.count_nonzero(full[nt:, :]) + np.count_nonzero(full[:nt, nx:]))
    return Series2(full[:nt, :nx])


def _powi(s, n: int, one):
    if isinstance(n, bool) or int(n) != n:
        raise SeriesError(f"integer exponent required, got {n!r}")
    n = int(n)
    if n < 0:
        raise SeriesError(f"negative exponent {n}: take recip() of the base instead")
    result, base = one, s
    while n:
        if n & 1:
            result = result * base
        n >>= 1
        if n:
            base = base * base
    return result


def powi(s: Series2, n: int) -> Series2:
    return _powi(s, n, Series2.constant(1.0, s.deg_t, s.deg_x))


def recip(a: Series2, name: str = "series") -> Series2:
    """Multiplicative inverse; the constant term must be nonzero."""
    c = a.coeffs
    a00 = c[0, 0]
    if abs(a00) <= RECIP_TOL:
        raise SingularDivisionError(
            f"cannot divide by {name}: constant term {a00:.3g} is zero at the expansion point"
        )
    nt, nx = c.shape
    r = np.zeros_like(c)
    for i in range(nt):
        for j in range(nx):
            acc = 1.0 if i == j == 0 else 0.0
            # r[i, j] is still zero, so the (0, 0) term drops out of the sum
            acc -= np.sum(c[: i + 1, : j + 1] * r[i::-1, j::-1][: i + 1, : j + 1])
            r[i, j] = acc / a00
    return Series2(r)


def diff(s: Series2, axis: str) -> Series2:
    """Formal partial derivative; ``axis`` may repeat letters, e.g. ``"xx"`` or ``"tx"``."""
    if not axis:
        raise SeriesError("empty derivative axis")
    c = s.coeffs
    for ax in axis:
        k = _check_axis(ax)
        c = np.apply_along_axis(_diff1, k, c)
    return Series2(c)


def integrate(s: Series2, axis: str, lower: float = 0.0) -> Series2:
    """Antiderivative along ``axis`` that vanishes at local coordinate ``lower``."""
    k = _check_axis(axis)
    c = np.moveaxis(s.coeffs, k, 0)
    out = np.zeros_like(c)
    out[1:] = c[:-1] / np.arange(1, c.shape[0])[:, None]
    _note_dropped(np.count_nonzero(c[-1]))
    if lower != 0.0:
        out[0] -= P.polyval(lower, out)
    return Series2(np.moveaxis(out, 0, k))


def eval_axis(s: Series2, axis: str, value: float) -> Series1:
    """Substitute a local coordinate into one axis; the result varies in the other."""
    k = _check_axis(axis)
    # polyval broadcasts over trailing axes, so put the evaluated axis first
    c = np.moveaxis(s.coeffs, k, 0)
    return Series1(P.polyval(value, c), AXES[1 - k])


def eval_point(s: Series2, t, x):
    """Value at local coordinates ``(t, x)``; accepts scalars or broadcastable arrays."""
    out = P.polyval2d(t, x, s.coeffs)
    return float(out) if np.ndim(out) == 0 else out


def eval_grid(s: Series2, ts, xs) -> np.ndarray:
    """Values on the tensor grid ``ts x xs`` (local coordinates), shape ``(len(ts), len(xs))``."""
    return P.polygrid2d(np.asarray(ts, float), np.asarray(xs, float), s.coeffs)


def lift(s: Series1, deg_t: int, deg_x: int) -> Series2:
    return s.lift(deg_t, deg_x)


# ---------------------------------------------------------------------------
# analytic functions of univariate series, via the ODEs they satisfy

ANALYTIC = ("exp", "sin", "cos", "sinh", "cosh", "atan", "sqrt")


def _exp_coeffs(s: np.ndarray) -> np.ndarray:
    # E' = s' E  =>  n E_n = sum_k k s_k E_{n-k}
    e = np.zeros_like(s)
    e[0] = math.exp(s[0])
    ks = np.arange(len(s)) * s
    for n in range(1, len(s)):
        e[n] = np.dot(ks[1 : n + 1], e[n - 1 :: -1][:n]) / n
    return e


def _sincos_coeffs(s: np.ndarray, hyperbolic: bool) -> tuple[np.ndarray, np.ndarray]:
    # S' = s' C,  C' = -s' S  (C' = +s' S for the hyperbolic pair)
    sgn = 1.0 if hyperbolic else -1.0
    sn = np.zeros_like(s)
    cs = np.zeros_like(s)
    if hyperbolic:
        sn[0], cs[0] = math.sinh(s[0]), math.cosh(s[0])
    else:
        sn[0], cs[0] = math.sin(s[0]), math.cos(s[0])
    ks = np.arange(len(s)) * s
    for n in range(1, len(s)):
        w = ks[1 : n + 1]
        sn[n] = np.dot(w, cs[n - 1 :: -1][:n]) / n
        cs[n] = sgn * np.dot(w, sn[n - 1 :: -1][:n]) / n
    return sn, cs


def _sqrt_coeffs(s: np.ndarray) -> np.ndarray:
    q = np.zeros_like(s)
    q[0] = math.sqrt(s[0])
    for n in range(1, len(s)):
        q[n] = (s[n] - np.dot(q[1:n], q[n - 1 : 0 : -1])) / (2.0 * q[0])
    return q


def analytic(name: str, s: Series1) -> Series1:
    """Compose ``name`` (one of :data:`ANALYTIC`) with a univariate series."""
    c = s.coeffs
    if name == "exp":
        out = _exp_coeffs(c)
    elif name in ("sin", "cos"):
        sn, cs = _sincos_coeffs(c, hyperbolic=False)
        out = sn if name == "sin" else cs
    elif name in ("sinh", "cosh"):
        sn, cs = _sincos_coeffs(c, hyperbolic=True)
        out = sn if name == "sinh" else cs
    elif name == "atan":
        # atan(s)' = s' / (1 + s^2)
        dq = _mul1(_diff1(c), _recip1(1.0 * (np.eye(1, len(c))[0]) + _mul1(c, c)))
        out = _integ1(dq)
        out[0] = math.atan(c[0])
    elif name == "sqrt":
        if c[0] <= 0.0:
            raise SeriesError(f"sqrt needs a positive constant term, got {c[0]:.6g}")
        out = _sqrt_coeffs(c)
    else:
        raise SeriesError(f"unknown function {name!r}; known: {', '.join(ANALYTIC)}")
    return Series1(out, s.axis)


@dataclass(frozen=True)
class Frame:
    """Truncation orders and expansion point shared by all series of a problem.

    ``center_t``/``center_x`` are the physical coordinates of the local origin.
    """

    deg_t: int = 16
    deg_x: int = 16
    center_t: float = 0.0
    center_x: float = 0.0

    def deg(self, axis: str) -> int:
        return self.deg_t if axis == "t" else self.deg_x

    def center(self, axis: str) -> float:
        return self.center_t if axis == "t" else self.center_x

    def local(self, axis: str, value: float) -> float:
        return value - self.center(axis)

    def zeros(self) -> Series2:
        return Series2.zeros(self.deg_t, self.deg_x)

    def constant(self, value: float) -> Series2:
        return Series2.constant(value, self.deg_t, self.deg_x)

    def var(self, axis: str) -> Series2:
        """The physical coordinate ``axis`` as a series in local coordinates."""
        return Series2.variable(axis, self.deg_t, self.deg_x, self.center(axis))

    def lift(self, s: Series1) -> Series2:
        return s.lift(self.deg_t, self.deg_x)
