import math

import numpy as np
import pytest

from sturm_green import (
    DiagonalDerivativeError,
    Forcing,
    GreenKernel,
    Potential,
    SamplingError,
    apply,
    apply_derivative,
    apply_indicator,
    kernel_dx,
    kernel_eval,
    kernel_row_integral,
    solve_bvp,
    solve_pfss,
)

from oracles import oscillator_kernel


@pytest.fixture(scope="module")
def unit_kernel():
    return GreenKernel(solve_pfss(Potential.constant(1.0), 10.0, 1e-10))


@pytest.fixture(scope="module")
def osc_kernel():
    return GreenKernel(solve_pfss(Potential.polynomial([1, 0, 1]), 10.0, 1e-10))


def test_unit_kernel_closed_form(unit_kernel):
    x = np.linspace(-8, 8, 120)
    X, T = np.meshgrid(x, x)
    np.testing.assert_allclose(kernel_eval(unit_kernel, X, T), 0.5 * np.exp(-np.abs(X - T)), atol=1e-12)


def test_oscillator_kernel_against_weber(osc_kernel):
    rng = np.random.default_rng(1)
    x, t = rng.uniform(-6, 6, (2, 2000))
    np.testing.assert_allclose(kernel_eval(osc_kernel, x, t), oscillator_kernel(x, t), rtol=1e-7)


def test_kernel_symmetry_and_derivative(osc_kernel):
    rng = np.random.default_rng(2)
    x, t = rng.uniform(-5, 5, (2, 500))
    np.testing.assert_allclose(kernel_eval(osc_kernel, x, t), kernel_eval(osc_kernel, t, x), rtol=1e-13)
    h = 1e-5
    fd = (kernel_eval(osc_kernel, x + h, t) - kernel_eval(osc_kernel, x - h, t)) / (2 * h)
    away = np.abs(x - t) > 1e-3
    np.testing.assert_allclose(kernel_dx(osc_kernel, x[away], t[away]), fd[away], rtol=1e-5, atol=1e-9)
    with pytest.raises(DiagonalDerivativeError):
        kernel_dx(osc_kernel, 1.0, 1.0)


def test_derivative_jump_on_diagonal(osc_kernel):
    # dG/dx(t+, t) - dG/dx(t-, t) = -1
    for t in (-3.0, 0.0, 2.5):
        jump = kernel_dx(osc_kernel, t + 1e-9, t) - kernel_dx(osc_kernel, t - 1e-9, t)
        assert jump == pytest.approx(-1.0, abs=1e-6)


@pytest.mark.parametrize("c", [1.0, 4.0])
def test_constant_forcing(c):
    rep = solve_bvp(Potential.constant(c), Forcing.constant(1.0), L=10.0)
    # padding leaves a tail of order exp(-pad) ~ 5e-10 at the box edge
    np.testing.assert_allclose(rep.y, 1 / c, atol=1e-9)
    np.testing.assert_allclose(rep.y_prime, 0.0, atol=1e-9)
    assert rep.truncation_bound < 1e-9
    assert rep.residual_norm < rep.tol
    assert rep.class_verdict == "D_2"


def test_indicator_forcing_closed_form():
    # q = 1, f = 1 on [-1, 1]: y = 1 - e^{-1} cosh x inside, sinh(1) e^{-|x|} outside
    rep = solve_bvp(Potential.constant(1.0), Forcing.indicator(-1.0, 1.0), L=6.0)
    x = rep.grid
    inside = np.abs(x) <= 1
    exact = np.where(inside, 1 - math.exp(-1) * np.cosh(x), math.sinh(1) * np.exp(-np.abs(x)))
    dexact = np.where(inside, -math.exp(-1) * np.sinh(x), -np.sign(x) * math.sinh(1) * np.exp(-np.abs(x)))
    np.testing.assert_allclose(rep.y, exact, atol=1e-10)
    np.testing.assert_allclose(rep.y_prime, dexact, atol=1e-9)


def test_oscillator_solution_satisfies_equation():
    q = Potential.polynomial([1, 0, 1])
    rep = solve_bvp(q, Forcing.constant(1.0), p="inf", L=8.0)
    assert rep.class_verdict == "D_inf0"
    assert rep.residual_norm < 1e-8
    # y = G 1 is even and decays
    np.testing.assert_allclose(rep.y, rep.y[::-1], rtol=1e-9)
    assert rep.decay["y_plus_L"] < rep.y.max()


def test_bounded_class_for_non_compact():
    rep = solve_bvp(Potential.sinusoid(2, 1), Forcing.constant(1.0), p="inf", L=8.0)
    assert rep.class_verdict == "D_inf"
    assert rep.note


def test_apply_matches_indicator_quadrature(osc_kernel):
    f = Forcing.indicator(-1.0, 0.5, 2.0)
    xs = np.array([-3.0, -0.2, 0.0, 0.7, 4.0])
    ref = 2.0 * apply_indicator(osc_kernel, -1.0, 0.5, xs)
    np.testing.assert_allclose(apply(osc_kernel, f, xs), ref, rtol=1e-9, atol=1e-14)
    # derivative by differencing the exact indicator integral
    h = 1e-5
    fd = 2.0 * (apply_indicator(osc_kernel, -1.0, 0.5, xs + h) - apply_indicator(osc_kernel, -1.0, 0.5, xs - h)) / (2 * h)
    np.testing.assert_allclose(apply_derivative(osc_kernel, f, xs), fd, rtol=1e-6, atol=1e-9)


def test_callable_and_array_forcing_agree(unit_kernel):
    fn = lambda t: np.exp(-t * t)  # noqa: E731
    xs = np.linspace(-3, 3, 7)
    a = apply(unit_kernel, fn, xs)
    b = apply(unit_kernel, fn(unit_kernel.grid), xs)
    np.testing.assert_allclose(a, b, rtol=1e-5)


def test_bad_forcing(unit_kernel):
    with pytest.raises(SamplingError):
        apply(unit_kernel, np.ones(5), 0.0)


def test_row_integrals(osc_kernel):
    wide = GreenKernel(solve_pfss(Potential.constant(1.0), 25.0, 1e-10))
    x = np.array([-5.0, 0.0, 5.0])
    row, drow = kernel_row_integral(wide, x)
    np.testing.assert_allclose(row, 1.0, atol=1e-6)
    np.testing.assert_allclose(drow, 1.0, atol=1e-6)
    r0, d0 = kernel_row_integral(osc_kernel, 0.0)
    r8, d8 = kernel_row_integral(osc_kernel, 8.0)
    assert r0 / r8 >= 5 and d0 / d8 >= 5


def test_report_dict_is_json_ready():
    import json

    rep = solve_bvp(Potential.constant(1.0), Forcing.constant(1.0), L=3.0, p=1)
    d = rep.to_dict()
    assert d["class_verdict"] == "D_1"
    json.dumps(d)


def test_kernel_examples():
    k4 = GreenKernel(solve_pfss(Potential.constant(4.0), 5.0, 1e-10))
    assert kernel_eval(k4, 0.0, 1.0) == pytest.approx(0.25 * math.exp(-2), rel=1e-10)
    k1 = GreenKernel(solve_pfss(Potential.constant(1.0), 5.0, 1e-10))
    assert kernel_eval(k1, 0.0, 2.0) == pytest.approx(0.5 * math.exp(-2), rel=1e-10)
    assert kernel_dx(k1, 1.0, 0.0) == pytest.approx(-0.5 * math.exp(-1), rel=1e-10)
    assert kernel_dx(k1, -1.0, 0.0) == pytest.approx(0.5 * math.exp(-1), rel=1e-10)
    # G = exp(-2|x - t|) / 4 integrates to 1/4; |dG/dx| = exp(-2|x - t|) / 2 to 1/2
    row, drow = kernel_row_integral(GreenKernel(solve_pfss(Potential.constant(4.0), 20.0, 1e-10)), 1.0)
    assert row == pytest.approx(0.25, abs=1e-8)
    assert drow == pytest.approx(0.5, abs=1e-8)


def test_kernel_diagonal_is_rho(osc_kernel):
    p = osc_kernel.pfss
    x = p.grid[::97]
    np.testing.assert_allclose(kernel_eval(osc_kernel, x, x), p.rho[::97], rtol=1e-12)


@pytest.mark.parametrize("q", [Potential.polynomial([1, 0, 1]), Potential.sinusoid(2, 1), Potential.constant(3.0)])
def test_decay_for_compact_forcing(q):
    L, R = 8.0, 1.0
    f = Forcing.indicator(-R, R, 2.0)
    rep = solve_bvp(q, f, L=L)
    bound = math.exp(-(L - R) / 2) * 2.0
    assert max(rep.decay.values()) <= bound


def test_unit_potential_without_decay_condition():
    rep = solve_bvp(Potential.constant(1.0), Forcing.constant(1.0), p="inf", L=5.0)
    assert rep.class_verdict == "D_inf"
    np.testing.assert_allclose(rep.y, 1.0, atol=1e-9)
