import math

import numpy as np
import pytest

import ratejumps as rj
from conftest import ALPHA, BETA, experiment_timeline

TRAPZ = getattr(np, "trapezoid", np.trapz)


def _rng(seed=0):
    return np.random.Generator(np.random.Philox(key=seed))


def test_deterministic_limit_recovers_the_rate_ode():
    # with vanishing volatility a trajectory is the Euler polygon of
    # x' = alpha + beta x and the discount is the trapezoid of that polygon
    mdl = rj.vasicek(ALPHA, BETA, 1e-12)
    tl = experiment_timeline(1)
    cfg = rj.PathConfig(n_paths=2, n_steps_per_year=64, seed=0)
    times, values, discount = rj.simulate_path(mdl, tl, 0.2, 0.0, 1.0, cfg, _rng())

    steps = np.diff(times)
    resid = values[1:] - values[:-1] - (ALPHA + BETA * values[:-1]) * steps
    assert np.max(np.abs(resid)) < 1e-9
    assert abs(math.log(discount) + TRAPZ(values, times)) < 1e-9

    x_exact = -ALPHA / BETA + (0.2 + ALPHA / BETA) * np.exp(BETA * times)
    assert np.max(np.abs(values - x_exact)) < 1e-3
    int_exact = -ALPHA / BETA + (0.2 + ALPHA / BETA) * (math.exp(BETA) - 1.0) / BETA
    assert abs(math.log(discount) + int_exact) < 1e-3


def test_rollover_adds_a_point_mass_to_the_discount():
    mdl = rj.vasicek(ALPHA, BETA, 1e-12)
    tl = experiment_timeline(2)
    cfg = rj.PathConfig(n_paths=2, n_steps_per_year=64, seed=3)
    times, values, discount = rj.simulate_path(mdl, tl, 0.1, 0.0, 1.0, cfg, _rng(3))
    idx = int(np.argmin(np.abs(times - 0.8)))
    assert times[idx] == pytest.approx(0.8, abs=1e-12)
    recomputed = TRAPZ(values, times) + values[idx]
    assert abs(math.log(discount) + recomputed) < 1e-9


def test_rollover_estimate_agrees_with_closed_form(model):
    tl = experiment_timeline(2)
    coeffs = rj.zcb_coefficients(model, tl)
    cfg = rj.PathConfig(n_paths=20000, n_steps_per_year=128, seed=42)
    est = rj.mc_price(model, tl, lambda x: np.ones_like(x), 0.0, 0.05, cfg)
    target = float(rj.zcb_price(coeffs, 0.0, np.array([0.05]))[0])
    assert abs(est.mean - target) < 3.0 * est.std_error + 2e-4


def test_plain_bond_estimate_agrees_with_closed_form(model):
    tl = experiment_timeline(1)
    coeffs = rj.zcb_coefficients(model, tl)
    cfg = rj.PathConfig(n_paths=100000, n_steps_per_year=256, seed=7)
    est = rj.mc_price(model, tl, lambda x: np.ones_like(x), 0.0, 0.05, cfg)
    target = float(rj.zcb_price(coeffs, 0.0, np.array([0.05]))[0])
    assert abs(est.mean - target) < 3.5 * est.std_error + 1e-4


def test_time_dependent_drift_reaches_the_paths():
    # mean reversion switches from weak to violent at t = 0.45, so an injected
    # displacement fades slowly before the switch and almost instantly after
    def kappa(t):
        return 0.5 if t < 0.45 else 80.0

    mdl = rj.general_model(
        mu=lambda t, x: -kappa(t) * np.asarray(x, dtype=float),
        sigma=lambda t, x: 1e-10 * np.ones_like(np.asarray(x, dtype=float)),
    )
    cfg = rj.PathConfig(n_paths=2, n_steps_per_year=100, seed=5)
    ratios = {}
    for when in (0.3, 0.5):
        tl = rj.merge_relevant_dates([(when, rj.Gaussian(0.09, 1e-8))], [], 0.7)
        times, values, _ = rj.simulate_path(mdl, tl, 0.0, 0.0, 0.7, cfg, _rng(5))
        idx = int(np.argmin(np.abs(times - (when + 0.09))))
        assert times[idx] == pytest.approx(when + 0.09, abs=1e-12)
        ratios[when] = values[idx] / 0.09
    assert ratios[0.3] > 0.5
    assert ratios[0.5] < 0.1
    assert ratios[0.3] > 10.0 * ratios[0.5]


@pytest.mark.parametrize(
    "dist,closed",
    [
        (rj.Gaussian(0.09, 0.5),
         (0.09 - 0.5 * 0.5**2) * math.exp(-0.5 * 0.09 + 0.5**2 * 0.5**2 / 8)),
        (rj.TwoPoint(0.09, 0.7),
         0.7 * 0.09 * math.exp(-0.5 * 0.09) - 0.3 * 0.09 * math.exp(0.5 * 0.09)),
    ],
)
def test_jump_moment_matches_closed_expectation(dist, closed):
    # rate sits at zero, jumps once at t = 0.5, then stays put: the discounted
    # terminal rate is Z exp(-Z/2) whose mean is known in closed form
    mdl = rj.vasicek(0.0, -1e-6, 1e-8)
    tl = rj.merge_relevant_dates([(0.5, dist)], [], 1.0)
    cfg = rj.PathConfig(n_paths=200000, n_steps_per_year=16, seed=11)
    est = rj.mc_price(mdl, tl, lambda x: x, 0.0, 0.0, cfg)
    assert abs(est.mean - closed) < 4.0 * est.std_error + 1e-6


def test_same_seed_same_estimate(model):
    tl = experiment_timeline(4)
    cfg = rj.PathConfig(n_paths=4000, n_steps_per_year=32, seed=13)
    a = rj.mc_price(model, tl, lambda x: np.ones_like(x), 0.0, 0.05, cfg)
    b = rj.mc_price(model, tl, lambda x: np.ones_like(x), 0.0, 0.05, cfg)
    assert a.mean == b.mean and a.std_error == b.std_error
    other = rj.PathConfig(n_paths=4000, n_steps_per_year=32, seed=14)
    c = rj.mc_price(model, tl, lambda x: np.ones_like(x), 0.0, 0.05, other)
    assert c.mean != a.mean


def test_antithetic_variant(model):
    tl = experiment_timeline(3)
    base = rj.PathConfig(n_paths=20000, n_steps_per_year=32, seed=9)
    anti = rj.PathConfig(n_paths=20000, n_steps_per_year=32, seed=9, antithetic=True)
    pa = rj.mc_price(model, tl, lambda x: np.ones_like(x), 0.0, 0.05, anti)
    pb = rj.mc_price(model, tl, lambda x: np.ones_like(x), 0.0, 0.05, anti)
    assert pa.mean == pb.mean
    plain = rj.mc_price(model, tl, lambda x: np.ones_like(x), 0.0, 0.05, base)
    spread = 5.0 * (plain.std_error + pa.std_error)
    assert abs(pa.mean - plain.mean) < spread
    with pytest.raises(ValueError, match="even"):
        rj.PathConfig(n_paths=4001, n_steps_per_year=32, seed=9, antithetic=True)


def test_zero_payoff_zero_estimate(model):
    tl = experiment_timeline(1)
    cfg = rj.PathConfig(n_paths=100, n_steps_per_year=16, seed=1)
    est = rj.mc_price(model, tl, lambda x: np.zeros_like(x), 0.0, 0.0, cfg)
    assert est.mean == 0.0
    assert est.std_error == 0.0
    assert est.n_paths == 100


def test_path_config_validation():
    with pytest.raises(ValueError, match="at least 2"):
        rj.PathConfig(n_paths=1, n_steps_per_year=32, seed=0)
    with pytest.raises(ValueError, match="at least 16"):
        rj.PathConfig(n_paths=100, n_steps_per_year=8, seed=0)


def test_simulate_path_validation(model):
    tl = experiment_timeline(1)
    cfg = rj.PathConfig(n_paths=2, n_steps_per_year=32, seed=0)
    with pytest.raises(ValueError, match="t0 < t1"):
        rj.simulate_path(model, tl, 0.0, 1.0, 1.0, cfg, _rng())
    with pytest.raises(ValueError, match="finite"):
        rj.simulate_path(model, tl, float("nan"), 0.0, 1.0, cfg, _rng())
