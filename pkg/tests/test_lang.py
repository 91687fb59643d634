import math

import numpy as np
import pytest

from picardbvp import series as S
from picardbvp.lang import (
    Add, Const, Deriv, DerivRef, Div, ExprError, Func, Mul, Neg, Number, ParseError, PowInt,
    StateRef, Var, eval_numeric, eval_rhs, expand_seed, fold_constant, parse_expr, to_text,
)
from picardbvp.problems import builtin_keys, load_builtin
from picardbvp.series import Frame, Series2

FRAME = Frame(8, 8)


def all_builtin_exprs():
    for key in builtin_keys():
        spec = load_builtin(key).spec
        exprs = [e for v in spec.vars for e in (v.seed, v.rhs)]
        exprs += [g for c in spec.corrections for g in c.targets]
        if spec.shooting:
            exprs += list(spec.shooting.targets)
        if spec.exact is not None:
            exprs.append(spec.exact)
        for k, e in enumerate(exprs):
            yield pytest.param(e, spec.constants, id=f"{key}-{k}")


# -- parsing ---------------------------------------------------------------------


def test_parse_first_order_rhs():
    e = parse_expr("-u_x + 2 + t + x")
    assert e == Add(Add(Add(Neg(DerivRef("u", "x")), Number(2.0)), Var("t")), Var("x"))


def test_parse_product():
    assert parse_expr("(1+t)*(1+x)") == Mul(Add(Number(1.0), Var("t")), Add(Number(1.0), Var("x")))


def test_parse_integer_power():
    assert parse_expr("u^(2)") == PowInt(StateRef("u"), 2)
    assert parse_expr("u^(m + 1)", {"m": 1}) == PowInt(StateRef("u"), 2)


def test_parse_constants_and_functions():
    e = parse_expr("A*exp(-x)/2", {"A": 3.0})
    assert e == Div(Mul(Const("A", 3.0), Func("exp", Neg(Var("x")))), Number(2.0))
    assert parse_expr("pi") == Const("pi", math.pi)


def test_parse_derivative_forms():
    assert parse_expr("u_xt") == DerivRef("u", "tx")
    assert parse_expr("D[xx](u)") == Deriv(StateRef("u"), "xx")


@pytest.mark.parametrize("text", ["u^1.5", "u^(-1)", "u^v", "tan(x)", "1 +", "(1 + x", "x $ 2", ""])
def test_parse_errors_carry_position(text):
    with pytest.raises(ParseError) as info:
        parse_expr(text)
    err = info.value
    assert 0 <= err.pos <= len(text)
    assert err.diagnostics


def test_fold_constant():
    assert fold_constant(parse_expr("pi/2")) == pytest.approx(math.pi / 2)
    assert fold_constant(parse_expr("1 + x")) is None
    assert fold_constant(parse_expr("u")) is None


@pytest.mark.parametrize("e,constants", list(all_builtin_exprs()))
def test_print_parse_round_trip(e, constants):
    assert parse_expr(to_text(e), constants) == e


def test_round_trip_keeps_negative_right_operands():
    for text in ["a - (-b)", "-(x - t)^2", "x/(t*x)", "x - (t - x)", "-x^2"]:
        e = parse_expr(text, {"a": 1.0, "b": 2.0})
        assert parse_expr(to_text(e), {"a": 1.0, "b": 2.0}) == e


# -- numeric evaluation ----------------------------------------------------------


def test_eval_numeric_examples():
    assert eval_numeric(parse_expr("(2+t)/(1+x)"), 1.0, 1.0) == pytest.approx(1.5)
    assert eval_numeric(parse_expr("exp(t)*cos(x)"), 0.0, 0.0) == pytest.approx(1.0)
    breather = parse_expr("-4*atan((m/sqrt(1-m^2))*sin(sqrt(1-m^2)*t)/cosh(m*x))", {"m": 0.1})
    assert eval_numeric(breather, 0.0, 0.7) == 0.0


def test_eval_numeric_state_and_errors():
    assert eval_numeric(parse_expr("u*t"), 2.0, 0.0, {"u": 3.0}) == 6.0
    with pytest.raises(ExprError):
        eval_numeric(parse_expr("1/x"), 0.0, 0.0)
    with pytest.raises(ExprError):
        eval_numeric(parse_expr("u_x"), 0.0, 0.0, {"u": 1.0})


# -- seed expansion --------------------------------------------------------------


def test_expand_cos():
    s = expand_seed(parse_expr("cos(x)"), "x", 4)
    np.testing.assert_allclose(s.coeffs, [1, 0, -1 / 2, 0, 1 / 24], atol=1e-15)


def test_expand_geometric():
    s = expand_seed(parse_expr("2/(x+1)"), "x", 3)
    np.testing.assert_allclose(s.coeffs, [2, -2, 2, -2], atol=1e-15)


def test_expand_matches_finite_differences():
    f = lambda x: math.exp(-math.exp(x))
    h = 1e-3
    oracle = [f(0), (f(h) - f(-h)) / (2 * h), (f(h) - 2 * f(0) + f(-h)) / (2 * h * h)]
    s = expand_seed(parse_expr("exp(-exp(x))"), "x", 2)
    np.testing.assert_allclose(s.coeffs, oracle, atol=1e-6)


def test_expand_rejects_wrong_axis_and_state():
    with pytest.raises(ExprError):
        expand_seed(parse_expr("t + x"), "x", 3)
    with pytest.raises(ExprError):
        expand_seed(parse_expr("u"), "x", 3)


def _seed_cases():
    for key in builtin_keys():
        spec = load_builtin(key).spec
        for v in spec.vars:
            yield pytest.param(spec, v, id=f"{key}:{v.name}")


@pytest.mark.parametrize("spec,v", list(_seed_cases()))
def test_seed_expansion_agrees_with_numeric(spec, v):
    axis = spec.seed_axis
    f = spec.frame()
    s = expand_seed(v.seed, axis, f.deg(axis), f.center(axis))
    lo, hi = spec.domain[axis]
    quarter = (hi - lo) / 4
    for y in np.linspace(lo + quarter, hi - quarter, 20):
        t, x = (y, 0.0) if axis == "t" else (0.0, y)
        assert s(f.local(axis, y)) == pytest.approx(float(eval_numeric(v.seed, t, x)), abs=1e-8)


# -- right-hand sides -------------------------------------------------------------


def test_rhs_first_sweep_integrand():
    u = Series2.constant(1.0, 8, 8) + FRAME.var("x")
    g = eval_rhs(parse_expr("-u_x + 2 + t + x"), {"u": u}, "t", {}, FRAME)
    assert g.allclose(1 + FRAME.var("t") + FRAME.var("x"))


def test_rhs_cross_derivative_evolving_in_x():
    t = FRAME.var("t")
    env = {"u": t + 2, "v": -(t + 2) * 0.5}
    rhs = parse_expr("-2*u_t*v")
    g = eval_rhs(rhs, env, "x", {"u": parse_expr("v"), "v": rhs}, FRAME)
    assert g.allclose(t + 2)


def test_rhs_division_by_derivative():
    u = FRAME.lift(expand_seed(parse_expr("2/(1+x)"), "x", 8))
    g = eval_rhs(parse_expr("-D[xx](u)/(2*D[x](u))"), {"u": u}, "t", {}, FRAME)
    assert S.eval_point(g, 0.0, 0.0) == pytest.approx(1.0, abs=1e-8)


def test_rhs_substitutes_evolution_derivative():
    table = {"u": parse_expr("2*u"), "T": parse_expr("-u_t*T")}
    env = {"u": FRAME.constant(3.0), "T": FRAME.constant(1.0)}
    g = eval_rhs(table["T"], env, "t", table, FRAME)
    assert g.allclose(FRAME.constant(-6.0))


def test_rhs_rejections():
    env = {"u": FRAME.constant(1.0)}
    with pytest.raises(ExprError, match="auxiliary"):
        eval_rhs(parse_expr("exp(u)"), env, "t", {}, FRAME)
    with pytest.raises(ExprError, match="second derivative"):
        eval_rhs(parse_expr("u_tt"), env, "t", {"u": parse_expr("u")}, FRAME)
    cyclic = {"u": parse_expr("u_t")}
    with pytest.raises(ExprError, match="one level"):
        eval_rhs(cyclic["u"], env, "t", cyclic, FRAME)
    with pytest.raises(ExprError, match="unbound"):
        eval_rhs(parse_expr("w"), env, "t", {}, FRAME)


def test_rhs_is_linear_for_affine_expressions():
    rng = np.random.default_rng(7)
    e = parse_expr("3*u_x - 2*u + t*u_tx + 5")
    shape = (FRAME.deg_t + 1, FRAME.deg_x + 1)
    u1, u2 = Series2(rng.uniform(-1, 1, shape)), Series2(rng.uniform(-1, 1, shape))
    a, b = 0.7, -1.3
    table = {"u": parse_expr("0")}
    lhs = eval_rhs(e, {"u": a * u1 + b * u2}, "t", table, FRAME)
    # the constant term is affine, not linear; carry it with weight a + b
    rhs = a * eval_rhs(e, {"u": u1}, "t", table, FRAME) + b * eval_rhs(e, {"u": u2}, "t", table, FRAME)
    assert lhs.allclose(rhs + 5 * (1 - a - b), atol=1e-12)
