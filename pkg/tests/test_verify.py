import numpy as np
import pytest

from sturm_green import (
    Potential,
    kolmogorov_compactness_probe,
    lower_bound_witness,
    run_inequality_suite,
    solve_pfss,
)
from sturm_green.verify import calibrated_constants, corrupt_rho, report_json

from conftest import CANONICAL


@pytest.fixture(scope="module")
def suites():
    return {name: run_inequality_suite(q, L=10.0, n=300) for name, q in CANONICAL.items()}


@pytest.mark.parametrize("name", sorted(CANONICAL))
def test_no_asserted_violations(suites, name):
    failed = [(r.check_id, r.worst_margin) for r in suites[name] if not r.passed]
    assert failed == []


def test_check_ids_and_modes(suites):
    ids = [r.check_id for r in suites["one"]]
    for cid in ("rho_lipschitz", "d_range", "log_derivative_scale", "rho_vs_d1_d2", "rho_vs_d", "log_derivative_floor", "exponential_growth", "rho_max", "kernel_decay", "kernel_vs_d", "kernel_derivative"):
        assert cid in ids
    assert {r.mode for r in suites["one"]} == {"assert", "report"}


def test_unit_potential_margins_are_exact(suites):
    by_id = {r.check_id: r for r in suites["one"]}
    # rho = d / 2 exactly, so the band [1/4, 3/2] on rho / d leaves 1/4 slack
    assert by_id["rho_vs_d"].worst_margin == pytest.approx(0.25, abs=1e-9)
    assert by_id["rho_max"].worst_margin == pytest.approx(0.5, abs=1e-12)


@pytest.mark.parametrize("factor, expected", [(2.0, {"rho_vs_d1_d2", "kernel_vs_d"}), (3.0, {"rho_max"})])
def test_injected_fault_is_caught(factor, expected):
    res = run_inequality_suite(Potential.constant(1.0), L=6.0, n=100, rho_scale=factor)
    failed = {r.check_id for r in res if not r.passed}
    assert expected <= failed


def test_corrupt_rho_scales_consistently():
    p = solve_pfss(Potential.constant(1.0), 4.0, 1e-10)
    c = corrupt_rho(p, 2.0)
    np.testing.assert_allclose(np.exp(c.log_v + c.log_u), c.rho, rtol=1e-12)


def test_report_is_deterministic():
    q = CANONICAL["periodic"]
    a = report_json(run_inequality_suite(q, L=6.0, n=120, seed=3))
    b = report_json(run_inequality_suite(q, L=6.0, n=120, seed=3))
    assert a == b


def test_worker_count_does_not_change_report(monkeypatch):
    q = CANONICAL["oscillator"]
    monkeypatch.setenv("STURM_GREEN_WORKERS", "1")
    a = report_json(run_inequality_suite(q, L=6.0, n=120))
    monkeypatch.setenv("STURM_GREEN_WORKERS", "4")
    b = report_json(run_inequality_suite(q, L=6.0, n=120))
    assert a == b


@pytest.mark.parametrize("name", sorted(CANONICAL))
def test_lower_bound_witness(name):
    assert lower_bound_witness(CANONICAL[name], L=10.0).passed


def test_calibration_on_unit_potential():
    cal = calibrated_constants()
    assert cal["log_ratio"] == pytest.approx(0.5, abs=1e-9)
    assert cal["local_mass"] > 0


@pytest.mark.parametrize(
    "name, trend", [("oscillator", "vanishing"), ("one", "bounded_below"), ("periodic", "bounded_below")]
)
def test_kolmogorov_probe(name, trend):
    res = kolmogorov_compactness_probe(CANONICAL[name])
    assert res.detail["trend"] == trend
    assert res.detail["consistent"]
    assert res.passed


def test_calibrated_constants_need_little_enlargement(suites):
    for name in CANONICAL:
        report = [r for r in suites[name] if r.mode == "report"]
        assert report
        for r in report:
            assert r.detail["max_enlargement"] <= 2.0


def test_operator_norm_ratios_do_not_grow():
    from sturm_green.verify import forcing_family, operator_norm_ratios

    assert len(forcing_family()) == 12
    res = operator_norm_ratios(CANONICAL["oscillator"], p=2, L=6.0)
    assert res.passed
    assert res.detail["ratio_y"][0] < 1.0
