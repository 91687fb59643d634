from dataclasses import replace

import numpy as np
import pytest

from picardbvp import series as S
from picardbvp.engine import PicardSolver, SolveError, correct, picard_sweep, run, seed_state, shooting_update
from picardbvp.lang import parse_expr
from picardbvp.model import Correction, ProblemError
from picardbvp.problemfile import parse_problem
from picardbvp.problems import builtin_keys, load_builtin
from picardbvp.report import convergence_table, error_grid


def values(spec, s, fn, n=7):
    """Compare series ``s`` of problem ``spec`` with a numpy function on an n x n grid."""
    c = spec.expansion_point()
    ts = np.linspace(*spec.domain["t"], n)
    xs = np.linspace(*spec.domain["x"], n)
    tt, xx = np.meshgrid(ts, xs, indexing="ij")
    return S.eval_grid(s, ts - c["t"], xs - c["x"]), np.broadcast_to(fn(tt, xx), tt.shape)


def assert_series_equals(spec, s, fn, atol=1e-12):
    got, want = values(spec, s, fn)
    np.testing.assert_allclose(got, want, atol=atol, rtol=0)


EX1 = load_builtin("ex1").spec
EX5 = load_builtin("ex5-shooting").spec


# -- seeds -----------------------------------------------------------------------


def test_seed_ex1():
    assert_series_equals(EX1, seed_state(EX1)["u"], lambda t, x: 1 + x)


def test_seed_slope_variable_is_straight_line():
    assert_series_equals(EX5, seed_state(EX5)["v"], lambda t, x: -(t + 2) / 2)


def test_zero_seed():
    spec = replace(EX1, vars=(replace(EX1.vars[0], seed=parse_expr("0")),))
    assert np.all(seed_state(spec)["u"].coeffs == 0)


# -- sweeps and corrections --------------------------------------------------------


def test_ex1_sweep_before_correction():
    bare = replace(EX1, corrections=())
    u = picard_sweep(bare, seed_state(bare))["u"]
    assert_series_equals(EX1, u, lambda t, x: 1 + x + t + t**2 / 2 + x * t)


def test_ex1_sweep_after_correction():
    u = picard_sweep(EX1, seed_state(EX1))["u"]
    assert_series_equals(EX1, u, lambda t, x: (1 + x) * (1 + t))


def test_pin_example():
    f = EX1.frame()
    t, x = f.var("t"), f.var("x")
    s = 1 + x + t + t * t * 0.5 + x * t
    assert_series_equals(EX1, correct(EX1.corrections[0], s, EX1), lambda t, x: 1 + x + t + x * t)


def test_pin_is_idempotent():
    f = EX1.frame()
    rng = np.random.default_rng(3)
    s = S.Series2(rng.uniform(-1, 1, (f.deg_t + 1, f.deg_x + 1)))
    once = correct(EX1.corrections[0], s, EX1)
    assert correct(EX1.corrections[0], once, EX1).allclose(once, atol=1e-12)


def test_blend_leaves_solution_unchanged():
    wave = load_builtin("wave").spec
    f = wave.frame()
    exact = f.lift(S.analytic("cos", f.lift(S.Series1.variable(f.deg_x, "x", f.center_x)).eval_axis("t", 0.0)))
    exact = exact * f.lift(S.analytic("exp", S.Series1.variable(f.deg_t, "t", f.center_t)))
    assert correct(wave.corrections[0], exact, wave).allclose(exact, atol=1e-12)


def _random_poly_text(rng, var, deg=3):
    return " + ".join(f"({c:.6f})*{var}^{k}" for k, c in enumerate(rng.uniform(-2, 2, deg + 1)))


def test_corrections_annihilate_boundary_residual():
    rng = np.random.default_rng(11)
    spec = replace(EX1, corrections=())
    f = spec.frame()
    worst = 0.0
    for case in range(200):
        axis = rng.choice(["t", "x"])
        trace = "x" if axis == "t" else "t"
        if case % 2:
            pa, pb = np.sort(rng.uniform(0, 1, 2))
            c = Correction("u", "blend", axis, (pa, pb),
                           (parse_expr(_random_poly_text(rng, trace)), parse_expr(_random_poly_text(rng, trace))))
        else:
            c = Correction("u", "pin", axis, (rng.uniform(0, 1),), (parse_expr(_random_poly_text(rng, trace)),))
        p = replace(spec, corrections=(c,))
        solver = PicardSolver(p)
        s = S.Series2(rng.uniform(-1, 1, (f.deg_t + 1, f.deg_x + 1)))
        out, _ = solver.correct(0, s)
        for point, target in zip(c.points, solver.targets[0]):
            resid = S.eval_axis(out, axis, f.local(axis, point)) - target
            worst = max(worst, float(np.max(np.abs(resid.coeffs))))
    assert worst <= 1e-12


def test_manufactured_polynomial_is_recovered():
    # exact u = t^2 x + x^3 + t, so u_t = 2 t x + 1 = u_x + 2 t x + 1 - t^2 - 3 x^2
    spec = parse_problem("""
problem "manufactured"
evolve t
domain t in [0, 1], x in [0, 1]
degree t=6 x=6
var u: seed = x^3 ; rhs = u_x + 2*t*x + 1 - t^2 - 3*x^2
correct u: pin x=0 to t
exact = t^2*x + x^3 + t
iterations 6
""")
    report = run(spec)
    assert_series_equals(spec, report.final["u"], lambda t, x: t**2 * x + x**3 + t, atol=1e-10)
    assert report.history[-1].state["u"].allclose(report.history[-2].state["u"], atol=1e-10)


def test_jacobi_matches_gauss_seidel_on_ex1():
    gs = run(EX1).final["u"]
    jac = run(replace(EX1, sweep="jacobi")).final["u"]
    assert gs.allclose(jac, atol=1e-12)


def test_zero_rhs_is_stationary():
    spec = replace(EX1, vars=(replace(EX1.vars[0], rhs=parse_expr("0")),))
    report = run(spec, 3)
    first = report.sweeps[0].state["u"]
    for it in report.sweeps[1:]:
        assert it.state["u"].allclose(first, atol=1e-12)


def test_gauss_seidel_sees_updated_values():
    spec = parse_problem("""
problem "order"
evolve t
domain t in [0, 1], x in [0, 1]
var a: seed = 1 ; rhs = 0
var b: seed = 0 ; rhs = a
iterations 1
""")
    gs = run(spec).final["b"]
    jac = run(replace(spec, sweep="jacobi")).final["b"]
    assert_series_equals(spec, gs, lambda t, x: t)
    assert_series_equals(spec, jac, lambda t, x: t)
    spec = replace(spec, vars=(replace(spec.vars[0], rhs=parse_expr("1")), spec.vars[1]))
    assert_series_equals(spec, run(spec).final["b"], lambda t, x: t + t**2 / 2)
    assert_series_equals(spec, run(replace(spec, sweep="jacobi")).final["b"], lambda t, x: t)


# -- shooting ------------------------------------------------------------------------


def test_initial_slope_from_seeds():
    gamma = PicardSolver(EX5).seed_state().gamma
    c = EX5.expansion_point()["t"]
    np.testing.assert_allclose(gamma.recenter(-c).coeffs[:3], [-2, -1, 0], atol=1e-12)


def test_module_shooting_update_matches_solver():
    state = seed_state(EX5)
    np.testing.assert_allclose(shooting_update(EX5.shooting, state, EX5).coeffs,
                               PicardSolver(EX5).shooting_update(state).coeffs, atol=0)


def test_zero_force_shooting_is_straight_line():
    spec = parse_problem("""
problem "line"
evolve x
domain t in [0, 1], x in [0, 2]
var u: seed = t ; rhs = v
var v: seed = 0 ; rhs = 0
shoot v: slope of u over x in [0, 2] targets t, 4 + 3*t
exact = t + (2 + t)*x
iterations 3
""")
    report = run(spec)
    c = spec.expansion_point()["t"]
    for it in report.history:
        np.testing.assert_allclose(it.gamma.recenter(-c).coeffs[:2], [2, 1], atol=1e-12)
    assert error_grid(report.final["u"], spec.exact, spec.domain).max_abs < 1e-12


def test_slope_after_four_sweeps():
    gamma = run(EX5).gamma.recenter(-EX5.expansion_point()["t"]).coeffs
    assert abs(gamma[0] + 1.99346) < 0.05
    assert abs(gamma[1] + 0.99673) < 0.05


# -- run ------------------------------------------------------------------------------


def test_zero_iterations_rejected():
    with pytest.raises(SolveError):
        run(EX1, 0)
    with pytest.raises(ProblemError):
        replace(EX1, iterations=0).validate()


def test_division_failure_names_sweep_and_variable():
    spec = parse_problem("""
problem "singular"
evolve t
domain t in [0, 1], x in [0, 1]
var u: seed = x - 1/2 ; rhs = 1/u
iterations 1
""")
    with pytest.raises(SolveError, match="sweep 1, variable 'u'"):
        run(spec)


def test_truncation_is_counted():
    report = run(load_builtin("ex5-shooting").spec)
    assert report.truncated > 0
    assert run(EX1).truncated == 0


def test_ex6_exact_after_two_sweeps():
    spec = load_builtin("ex6-division").spec
    report = run(spec, 2)
    assert error_grid(report.final["u"], spec.exact, spec.domain).max_abs <= 1e-9


# Residual norms should not grow from sweep 2 on.  Two builtins break this.
RESIDUAL_GROWS = {
    **{f"ex2-case{k}": "iterates diverge on the unit square (see the sympy oracle)" for k in range(1, 8)},
    "sine-gordon-m09": "blend residual grows 0.46 -> 0.60 between sweeps 3 and 4 under Jacobi sweeps",
}


@pytest.mark.parametrize("key", [
    pytest.param(k, marks=pytest.mark.xfail(reason=RESIDUAL_GROWS[k], strict=True)) if k in RESIDUAL_GROWS else k
    for k in builtin_keys()
])
def test_residual_non_increasing_from_sweep_two(key):
    sweeps = run(load_builtin(key).spec).sweeps
    norms = [it.residual_norm for it in sweeps]
    for prev, cur in zip(norms[1:], norms[2:]):
        assert cur <= 1.05 * prev


# Exact symbolic iterates (tests/oracles/ex2_case1_sympy.py), max |error| on a 50x50 grid.
# The series iterates are truncated at degree 16, hence the small tolerance.
SYMPY_EX2_CASE1 = {
    1.0: [1.2342106135535147, 5.957340440078759, 27.51013844115019, 766.9513177966805],
    0.25: [0.009664083152709946, 0.009419245603535575, 0.005175874625532373, 0.0038308908710860123],
    0.1: [0.0005438302013096585, 0.00020422954458321207, 3.5362850045572713e-05, 9.333638445241377e-06],
}


@pytest.mark.parametrize("side", sorted(SYMPY_EX2_CASE1))
def test_ex2_case1_matches_symbolic_iterates(side):
    spec = load_builtin("ex2-case1").spec
    spec = replace(spec, domain={"t": (0.0, side), "x": (0.0, side)})
    rows = convergence_table(run(spec), spec.exact, 50)
    np.testing.assert_allclose([r.max_abs for r in rows], SYMPY_EX2_CASE1[side], rtol=1e-5, atol=1e-6)
