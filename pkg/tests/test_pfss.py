import math

import numpy as np
import pytest

from sturm_green import OutOfDomainError, Potential, solve_pfss
from sturm_green.pfss import (
    log_ratio_u,
    log_ratio_v,
    rho_at,
    riccati_residual,
    wronskian_residual,
)

from oracles import oscillator_rho, oscillator_w_u, oscillator_w_v


@pytest.fixture(scope="module")
def oscillator():
    return solve_pfss(Potential.polynomial([1, 0, 1]), 10.0, 1e-10)


@pytest.mark.parametrize("c", [1.0, 2.0, 5.0])
def test_constant_potential_is_exact(c):
    p = solve_pfss(Potential.constant(c * c), 8.0, 1e-10)
    np.testing.assert_allclose(p.w_v, c, atol=1e-12)
    np.testing.assert_allclose(p.w_u, -c, atol=1e-12)
    np.testing.assert_allclose(p.rho, 1 / (2 * c), atol=1e-12)
    np.testing.assert_allclose(p.log_v, c * p.grid + 0.5 * math.log(1 / (2 * c)), atol=1e-10)


def test_oscillator_against_weber_functions(oscillator):
    x = oscillator.grid
    np.testing.assert_allclose(oscillator.w_v, oscillator_w_v(x), rtol=1e-8)
    np.testing.assert_allclose(oscillator.w_u, oscillator_w_u(x), rtol=1e-8)
    np.testing.assert_allclose(oscillator.rho, oscillator_rho(x), rtol=1e-8)


def test_interpolated_fields(oscillator):
    xs = np.linspace(-9.9, 9.9, 777)
    w_v, w_u = oscillator.w_at(xs)
    np.testing.assert_allclose(w_v, oscillator_w_v(xs), rtol=1e-7)
    np.testing.assert_allclose(np.exp(oscillator.log_v_at(xs) + oscillator.log_u_at(xs)),
                               oscillator_rho(xs), rtol=1e-7)
    np.testing.assert_allclose(rho_at(oscillator, xs), oscillator_rho(xs), rtol=1e-4)


def test_invariants(oscillator):
    assert wronskian_residual(oscillator) < 1e-12
    assert np.all(oscillator.w_v >= 1.0 - 1e-10)
    assert np.all(oscillator.w_u <= -1.0 + 1e-10)
    assert np.all(np.diff(oscillator.log_v) > 0)
    assert np.all(np.diff(oscillator.log_u) < 0)
    assert np.all(oscillator.rho <= 0.5 + 1e-12)


def test_renormalisation_keeps_rho(oscillator):
    r = oscillator.renormalized(3.0)
    np.testing.assert_allclose(r.log_v + r.log_u, oscillator.log_v + oscillator.log_u, atol=1e-13)
    assert r.log_v[0] - oscillator.log_v[0] == pytest.approx(math.log(3.0))


def test_log_ratios(oscillator):
    assert log_ratio_v(oscillator, -2.0, 3.0) <= -5.0
    assert log_ratio_u(oscillator, 3.0, -2.0) <= -5.0
    with pytest.raises(ValueError):
        log_ratio_v(oscillator, 3.0, -2.0)


def test_out_of_domain(oscillator):
    with pytest.raises(OutOfDomainError):
        oscillator.log_v_at(10.5)


def test_riccati_residual_is_second_order():
    q = Potential.polynomial([1, 0, 1])
    r = [riccati_residual(solve_pfss(q, 10.0, 1e-12, spacing=h)) for h in (0.02, 0.01)]
    assert 3.5 <= r[0] / r[1] <= 4.5


def test_piecewise_potential_resolves_jump():
    q = Potential.from_spec({"segments": [
        {"from": "-inf", "to": 0, "shape": "constant", "params": {"value": 1}},
        {"from": 0, "to": "+inf", "shape": "constant", "params": {"value": 4}},
    ]})
    p = solve_pfss(q, 10.0, 1e-10)
    # v' / v = 1 to the left; u' / u = -2 to the right, continuous through 0
    left, right = p.grid < -0.0, p.grid > 0.0
    np.testing.assert_allclose(p.w_v[left], 1.0, atol=1e-10)
    np.testing.assert_allclose(p.w_u[right], -2.0, atol=1e-10)
    assert wronskian_residual(p) < 1e-12
    assert 0.0 in p.grid


def test_csv(tmp_path, oscillator):
    path = tmp_path / "p.csv"
    oscillator.to_csv(path)
    head = path.read_text().splitlines()[0]
    assert head == "x,w_v,w_u,rho,log_v,log_u"


def test_renormalisation_leaves_kernel_unchanged(oscillator):
    from sturm_green import GreenKernel, Forcing, apply, kernel_eval

    a, b = GreenKernel(oscillator), GreenKernel(oscillator.renormalized(1e5))
    x = np.linspace(-5, 5, 23)
    X, T = np.meshgrid(x, x)
    np.testing.assert_allclose(kernel_eval(a, X, T), kernel_eval(b, X, T), rtol=1e-10)
    f = Forcing.indicator(-1.0, 2.0)
    np.testing.assert_allclose(apply(a, f, x), apply(b, f, x), rtol=1e-10)
