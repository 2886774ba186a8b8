import glob
import math
import os

import pytest
from hypothesis import given, settings, strategies as st

import ratejumps as rj
from conftest import CONFIG_DIR, bundled

GOOD = """
[model]
kind vasicek
alpha 0.075
beta -0.3
sigma 0.1

[timeline]
rollover 0.8
jump 0.5 gaussian mean=0.09 std=0.5

[product]
kind zcb
maturity 1.0

[engines]
closed
fd
"""


def test_every_bundled_scenario_parses():
    paths = sorted(glob.glob(os.path.join(str(CONFIG_DIR), "*.cfg")))
    assert len(paths) == 11
    for p in paths:
        cfg = rj.load_config(p)
        assert isinstance(cfg, rj.ScenarioConfig)
        assert cfg.alpha == 0.075 and cfg.beta == -0.3 and cfg.sigma == 0.1


def test_reference_scenario_fields():
    cfg = rj.load_config(bundled("case1_zcb"))
    assert cfg.product == rj.ZcbProduct(maturity=1.0)
    assert cfg.rollovers == () and cfg.jumps == ()
    assert cfg.engines == ("closed", "fd", "semianalytic", "mc")
    assert cfg.mc.paths == 200000
    assert cfg.mc.steps_per_year == 512
    assert cfg.mc.x0 == 0.05
    assert not cfg.mc.antithetic
    assert cfg.dx == 5e-3 and cfg.dt == 4e-3
    assert cfg.tol_kernel == 1e-7 and cfg.tol_jump == 1e-12
    assert cfg.horizon == 1.0


def test_discrete_scenario_fields():
    cfg = rj.load_config(bundled("case4_zcb_discrete"))
    assert cfg.rollovers == (0.8,)
    assert cfg.jumps == ((0.5, rj.TwoPoint(0.09, 0.7)),)
    cfg = rj.load_config(bundled("case4_call_discrete"))
    assert cfg.product == rj.CallProduct(strike=0.5, expiry=1.0, bond_maturity=1.5)
    assert "closed" not in cfg.engines
    assert cfg.horizon == 1.0


_dist = st.one_of(
    st.builds(rj.Gaussian,
              st.floats(-2, 2, allow_nan=False),
              st.floats(1e-3, 3, allow_nan=False)),
    st.builds(rj.TwoPoint,
              st.floats(1e-3, 2, allow_nan=False),
              st.floats(0, 1, allow_nan=False)),
)


@st.composite
def _configs(draw):
    kind = draw(st.sampled_from(["zcb", "call"]))
    if kind == "zcb":
        product = rj.ZcbProduct(maturity=draw(st.floats(0.1, 30, allow_nan=False)))
    else:
        expiry = draw(st.floats(0.1, 10, allow_nan=False))
        product = rj.CallProduct(
            strike=draw(st.floats(1e-3, 10, allow_nan=False)),
            expiry=expiry,
            bond_maturity=expiry + draw(st.floats(0.1, 10, allow_nan=False)),
        )
    rolls = tuple(sorted(draw(st.lists(st.floats(0.01, 50, allow_nan=False),
                                       unique=True, max_size=3))))
    jump_times = tuple(sorted(draw(st.lists(st.floats(0.01, 50, allow_nan=False),
                                            unique=True, max_size=3))))
    jumps = tuple((t, draw(_dist)) for t in jump_times)
    return rj.ScenarioConfig(
        alpha=draw(st.floats(-5, 5, allow_nan=False)),
        beta=draw(st.sampled_from([-1.0, 1.0])) * draw(st.floats(1e-3, 10, allow_nan=False)),
        sigma=draw(st.floats(1e-3, 10, allow_nan=False)),
        product=product,
        rollovers=rolls,
        jumps=jumps,
        theta=draw(st.floats(0, 1, allow_nan=False)),
        dx=draw(st.floats(1e-4, 1, allow_nan=False)),
        dt=draw(st.floats(1e-4, 1, allow_nan=False)),
        x_min=draw(st.floats(-10, 0, allow_nan=False)),
        x_max=draw(st.floats(0.001, 10, allow_nan=False)),
        tol_kernel=draw(st.floats(1e-14, 1e-3, allow_nan=False)),
        tol_jump=draw(st.floats(1e-14, 1e-3, allow_nan=False)),
        engines=tuple(draw(st.lists(st.sampled_from(rj.KNOWN_ENGINES),
                                    unique=True, min_size=1))),
        mc=rj.McSettings(
            paths=draw(st.integers(2, 10**6)),
            steps_per_year=draw(st.integers(16, 1024)),
            seed=draw(st.integers(0, 2**31)),
            x0=draw(st.floats(-5, 5, allow_nan=False)),
            antithetic=draw(st.booleans()),
        ),
    )


@settings(deadline=None)
@given(_configs())
def test_serialize_parse_round_trip(cfg):
    again = rj.parse_config(rj.serialize_config(cfg))
    assert again == cfg


def test_errors_carry_line_numbers():
    text = "[model]\nkind vasicek\nalpha nope\n"
    with pytest.raises(rj.ConfigError) as ei:
        rj.parse_config(text)
    assert ei.value.line_no == 3
    assert "<config>:3: not a number: 'nope'" in str(ei.value)

    with pytest.raises(rj.ConfigError, match=r"myfile:1: unknown section"):
        rj.parse_config("[banana]\n", source="myfile")


def test_structural_errors():
    with pytest.raises(rj.ConfigError, match="before any"):
        rj.parse_config("kind vasicek\n")
    with pytest.raises(rj.ConfigError, match="unknown model key"):
        rj.parse_config("[model]\nfoo 1\n")
    with pytest.raises(rj.ConfigError, match="takes one value"):
        rj.parse_config("[model]\nalpha 1 2\n")
    with pytest.raises(rj.ConfigError, match="unknown jump distribution"):
        rj.parse_config("[timeline]\njump 0.5 cauchy scale=1\n")
    with pytest.raises(rj.ConfigError, match="gaussian jump needs"):
        rj.parse_config("[timeline]\njump 0.5 gaussian mean=0.1\n")
    with pytest.raises(rj.ConfigError, match="one engine name per line"):
        rj.parse_config(GOOD + "fd extra\n")
    with pytest.raises(rj.ConfigError, match="missing 'sigma'"):
        rj.parse_config("[model]\nkind vasicek\nalpha 1\nbeta -1\n")
    with pytest.raises(rj.ConfigError, match=r"missing \[product\]"):
        rj.parse_config("[model]\nkind vasicek\nalpha 1\nbeta -1\nsigma 1\n")
    with pytest.raises(rj.ConfigError, match="needs maturity"):
        rj.parse_config(GOOD.replace("maturity 1.0\n", ""))


def test_empty_engines_section_is_rejected():
    text = GOOD.replace("closed\nfd\n", "")
    with pytest.raises(rj.ConfigError, match="names no engine"):
        rj.parse_config(text)


def test_semantic_validation():
    with pytest.raises(rj.ConfigError, match="sigma must be positive"):
        rj.parse_config(GOOD.replace("sigma 0.1", "sigma -0.1"))
    with pytest.raises(rj.ConfigError, match="unknown engine"):
        rj.parse_config(GOOD.replace("closed\nfd", "warp"))
    with pytest.raises(rj.ConfigError, match="duplicate engine"):
        rj.parse_config(GOOD.replace("closed\nfd", "fd\nfd"))
    with pytest.raises(rj.ConfigError, match="strictly increasing"):
        rj.parse_config(GOOD.replace("rollover 0.8", "rollover 0.8\nrollover 0.3"))
    bad_call = GOOD.replace("kind zcb\nmaturity 1.0",
                            "kind call\nstrike 0.5\nexpiry 2.0\nbond 1.5")
    with pytest.raises(rj.ConfigError, match="expiry < bond"):
        rj.parse_config(bad_call)
    with pytest.raises(rj.ConfigError, match="not a flag"):
        rj.parse_config(GOOD + "\n[mc]\nantithetic maybe\n")


def test_load_config_reports_unreadable_path(tmp_path):
    with pytest.raises(rj.ConfigError, match="cannot read"):
        rj.load_config(tmp_path / "missing.cfg")


def test_overrides():
    cfg = rj.load_config(bundled("case1_zcb"))
    out = rj.with_overrides(cfg, dx=1e-3, mc_seed=99, mc_paths=10)
    assert out.dx == 1e-3
    assert out.mc.seed == 99 and out.mc.paths == 10
    assert out.mc.steps_per_year == cfg.mc.steps_per_year
    assert cfg.dx == 5e-3 and cfg.mc.seed != 99
    assert math.isclose(out.horizon, cfg.horizon)
