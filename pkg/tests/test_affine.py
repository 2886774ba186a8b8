import math

import numpy as np
import pytest

import ratejumps as rj
from conftest import ALPHA, BETA, SIGMA, experiment_timeline


def norm_cdf(z):
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


# ---- slope coefficient b ---- #

def test_b_closed_form_value(model):
    tl = experiment_timeline(1)
    b = rj.riccati_b(model, tl)
    # (e^{beta (T - t)} - 1) / beta at t = 0
    assert float(b(0.0)) == pytest.approx((math.exp(-0.3) - 1.0) / -0.3, abs=1e-14)
    assert float(b(0.0)) == pytest.approx(0.8639392644, abs=1e-9)


def test_b_terminal_value_is_zero(model):
    for case in (1, 2, 4):
        b = rj.riccati_b(model, experiment_timeline(case))
        assert float(b(1.0)) == pytest.approx(0.0, abs=1e-12)


def test_b_jumps_by_one_at_rollover(model):
    tl = experiment_timeline(2)
    b = rj.riccati_b(model, tl)
    below = float(b(0.8 - 1e-10))
    at = float(b(0.8))
    assert below == pytest.approx(at + 1.0, abs=1e-7)


def test_b_with_two_rollovers_restarts_twice(model):
    tl = rj.merge_relevant_dates([], [0.4, 0.8], 1.0)
    b = rj.riccati_b(model, tl)
    for tn in (0.4, 0.8):
        assert float(b(tn - 1e-10)) == pytest.approx(float(b(tn)) + 1.0, abs=1e-7)
    # pure-diffusion slope keeps growing as more roll-overs accumulate
    assert float(b(0.0)) > float(b(0.4))


def test_numeric_riccati_matches_closed_form(model):
    # same constants fed through the generic coefficient path
    m = rj.affine_model(lambda t: ALPHA, lambda t: BETA, lambda t: SIGMA**2)
    for case in (1, 2):
        tl = experiment_timeline(case)
        b_exact = rj.riccati_b(model, tl)
        b_num = rj.riccati_b(m, tl)
        for t in np.linspace(0.0, 1.0, 23):
            assert float(b_num(t)) == pytest.approx(float(b_exact(t)), abs=1e-10)


def test_riccati_blowup_is_reported():
    # delta < 0 makes the quadratic term push b to infinity in finite time
    m = rj.affine_model(lambda t: 0.0, lambda t: 5.0, lambda t: 0.01, lambda t: -2.0)
    with pytest.raises(ValueError, match="blew up"):
        rj.riccati_b(m, rj.merge_relevant_dates([], [], 1.0))


# ---- intercept coefficient a ---- #

def test_quadrature_a_matches_explicit_a(model):
    m = rj.affine_model(lambda t: ALPHA, lambda t: BETA, lambda t: SIGMA**2)
    rng = np.random.default_rng(7)
    for case in (1, 2, 3, 4):
        tl = experiment_timeline(case)
        exact = rj.zcb_coefficients(model, tl)
        b = rj.riccati_b(m, tl)
        a_quad = rj.integrate_a(m, tl, b)
        for t in rng.uniform(0.0, 1.0, 20):
            assert a_quad(float(t)) == pytest.approx(exact.a_eval(float(t)), abs=2e-9)


def test_a_jump_equals_negative_log_mgf(model):
    tl = experiment_timeline(3)
    coeffs = rj.zcb_coefficients(model, tl)
    s = 0.5
    b_s = float(coeffs.b_eval(s))
    gap = coeffs.a_eval(s - 1e-10) - coeffs.a_eval(s)
    assert gap == pytest.approx(-rj.log_mgf_neg(rj.Gaussian(0.09, 0.5), b_s), abs=1e-8)


def test_a_jump_for_two_point_sizes(model):
    dist = rj.TwoPoint(0.09, 0.7)
    tl = rj.merge_relevant_dates([(0.5, dist)], [], 1.0)
    coeffs = rj.zcb_coefficients(model, tl)
    b_s = float(coeffs.b_eval(0.5))
    gap = coeffs.a_eval(0.5 - 1e-10) - coeffs.a_eval(0.5)
    assert gap == pytest.approx(-rj.log_mgf_neg(dist, b_s), abs=1e-8)


# ---- bond prices ---- #

def test_zcb_is_one_at_maturity(model):
    for case in (1, 2, 3, 4):
        coeffs = rj.zcb_coefficients(model, experiment_timeline(case))
        vals = rj.zcb_price(coeffs, 1.0, np.array([-0.5, 0.0, 1.0]))
        assert np.allclose(vals, 1.0, atol=1e-14)


def test_zcb_rollover_left_limit(model):
    coeffs = rj.zcb_coefficients(model, experiment_timeline(2))
    for x in (-0.5, 0.0, 1.0):
        left = rj.zcb_price(coeffs, 0.8 - 1e-10, x)
        at = rj.zcb_price(coeffs, 0.8, x)
        assert left == pytest.approx(math.exp(-x) * at, rel=1e-7)


def test_zcb_rejects_time_past_maturity(model):
    coeffs = rj.zcb_coefficients(model, experiment_timeline(1))
    with pytest.raises(ValueError):
        rj.zcb_price(coeffs, 1.5, 0.0)


def test_duration_identity(model):
    # -d/dx log P equals b, by central differences
    for case in (1, 2, 3, 4):
        coeffs = rj.zcb_coefficients(model, experiment_timeline(case))
        b = coeffs.b_eval
        h = 1e-6
        for t in (0.0, 0.3, 0.65, 0.9):
            for x in (-0.3, 0.0, 0.7):
                up = rj.zcb_price(coeffs, t, x + h)
                dn = rj.zcb_price(coeffs, t, x - h)
                slope = -(math.log(up) - math.log(dn)) / (2 * h)
                assert slope == pytest.approx(float(b(t)), abs=1e-6)


def test_closed_form_refuses_unsupported_schedules(model):
    both = rj.merge_relevant_dates([(0.8, rj.Gaussian(0, 0.1))], [0.8], 1.0)
    with pytest.raises(ValueError):
        rj.zcb_coefficients(model, both)
    at_maturity = rj.merge_relevant_dates([], [1.0], 1.0)
    with pytest.raises(ValueError):
        rj.zcb_coefficients(model, at_maturity)
    gen = rj.general_model(lambda t, x: -x, lambda t, x: 0.1)
    with pytest.raises(ValueError):
        rj.riccati_b(gen, experiment_timeline(1))


# ---- bond calls ---- #

CALL = rj.CallSpec(strike=0.5, expiry=1.0, bond_maturity=1.5)


def test_sigma_c_backward_recursion(model):
    # adding a Gaussian jump date raises sigma_c^2 by b_TS^2 g^2 e^{2 beta (T-s)}
    tl_plain = experiment_timeline(1, maturity=1.5)
    tl_jump = experiment_timeline(3, maturity=1.5)
    b_TS = float(rj.riccati_b(model, tl_plain)(1.0))
    for t in (0.0, 0.2, 0.45):
        lo = rj.call_sigma_c(model, tl_plain, CALL, t)
        hi = rj.call_sigma_c(model, tl_jump, CALL, t)
        bump = b_TS**2 * 0.5**2 * math.exp(2 * BETA * (1.0 - 0.5))
        assert hi**2 - lo**2 == pytest.approx(bump, abs=1e-12)
    # past the jump date the two schedules agree
    assert rj.call_sigma_c(model, tl_jump, CALL, 0.7) == pytest.approx(
        rj.call_sigma_c(model, tl_plain, CALL, 0.7), abs=1e-14
    )


def test_sigma_c_explicit_diffusion_value(model):
    tl = experiment_timeline(1, maturity=1.5)
    b_TS = (math.exp(BETA * 0.5) - 1.0) / BETA
    var = (SIGMA**2 / (2 * BETA)) * (math.exp(2 * BETA) - 1.0)
    assert rj.call_sigma_c(model, tl, CALL, 0.0) == pytest.approx(
        b_TS * math.sqrt(var), abs=1e-14
    )


def test_call_at_expiry_is_payoff(model):
    tl = experiment_timeline(2, maturity=1.5)
    coeffs = rj.zcb_coefficients(model, tl)
    xs = np.array([-0.5, 0.0, 0.4, 1.0])
    vals = rj.call_price(model, tl, CALL, 1.0, xs)
    assert np.allclose(vals, np.maximum(rj.zcb_price(coeffs, 1.0, xs) - 0.5, 0.0), atol=1e-14)


def test_call_bounds_and_strike_monotonicity(model):
    tl = experiment_timeline(4, maturity=1.5)
    coeffs = rj.zcb_coefficients(model, tl)
    xs = np.linspace(-0.5, 1.0, 31)
    p_s = rj.zcb_price(coeffs, 0.0, xs)
    prev = None
    for k in (0.3, 0.5, 0.7, 0.9):
        spec = rj.CallSpec(strike=k, expiry=1.0, bond_maturity=1.5)
        vals = rj.call_price(model, tl, spec, 0.0, xs)
        assert np.all(vals >= 0.0) and np.all(vals <= p_s + 1e-14)
        if prev is not None:
            assert np.all(vals <= prev + 1e-14)
        prev = vals


def test_call_at_forward_strike(model):
    # with K equal to the forward bond price the two tail terms share a strike
    tl = experiment_timeline(3, maturity=1.5)
    x = 0.1
    p_s = rj.zcb_price(rj.zcb_coefficients(model, tl), 0.0, x)
    p_t = rj.zcb_price(rj.zcb_coefficients(model, tl.truncated(1.0)), 0.0, x)
    spec = rj.CallSpec(strike=p_s / p_t, expiry=1.0, bond_maturity=1.5)
    sc = rj.call_sigma_c(model, tl, spec, 0.0)
    expect = p_s * (norm_cdf(0.5 * sc) - norm_cdf(-0.5 * sc))
    assert rj.call_price(model, tl, spec, 0.0, x) == pytest.approx(expect, abs=1e-14)


def test_call_refuses_two_point_jump_before_expiry(model):
    tl = rj.merge_relevant_dates([(0.5, rj.TwoPoint(0.09, 0.7))], [], 1.5)
    with pytest.raises(ValueError, match="non-Gaussian"):
        rj.call_price(model, tl, CALL, 0.0, 0.0)


def test_call_degenerate_volatility_reports_intrinsic():
    m = rj.vasicek(ALPHA, BETA, 1e-300)
    tl = rj.merge_relevant_dates([], [], 1.5)
    meta = {}
    x = 0.0
    v = rj.call_price(m, tl, CALL, 0.0, x, meta=meta)
    assert meta.get("degenerate_sigma_c") is True
    p_s = rj.zcb_price(rj.zcb_coefficients(m, tl), 0.0, x)
    p_t = rj.zcb_price(rj.zcb_coefficients(m, tl.truncated(1.0)), 0.0, x)
    assert v == pytest.approx(max(p_s - 0.5 * p_t, 0.0), abs=1e-15)


def test_call_closed_form_against_coarse_grid_sweep(model):
    tl = experiment_timeline(1, maturity=1.5)
    sweep_tl = experiment_timeline(1, maturity=1.0)
    coeffs_s = rj.zcb_coefficients(model, tl)

    def payoff(xs):
        return np.maximum(rj.zcb_price(coeffs_s, 1.0, xs) - 0.5, 0.0)

    cert = rj.localize_domain(model, sweep_tl, -0.5, 1.0, 1.0)
    cfg = rj.FdConfig(theta=0.5, dx=1e-2, dt=4e-3, domain=cert)
    res = rj.sweep_fd(model, sweep_tl, payoff, cfg)
    mask = rj.roi_mask(res.xs, -0.5, 1.0)
    closed = rj.call_price(model, tl, CALL, 0.0, res.xs[mask])
    assert rj.mean_abs(res.values[mask], closed) < 5e-6
