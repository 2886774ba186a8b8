"""Bond and bond-option pricing when the short rate jumps at announced dates.

The model is a one-factor short rate with drift alpha(t) + beta(t) x and
instantaneous variance gamma(t) + delta(t) x, plus two kinds of behaviour at
a finite set of known calendar dates: a random jump of the rate itself, and a
roll-over of the bank-account numeraire that multiplies value functions by
e^{-x} across the date.  Four engines price the same products and check each
other: a closed form for the constant-coefficient model with Gaussian jump
sizes, a semi-analytic sweep that convolves the transition kernel between
dates, a finite-difference theta scheme on a certified domain, and a Monte
Carlo simulator.
"""

from .affine import (
    CallSpec,
    ZcbCoefficients,
    call_price,
    call_sigma_c,
    integrate_a,
    riccati_b,
    zcb_coefficients,
    zcb_price,
)
from .config import (
    KNOWN_ENGINES,
    CallProduct,
    ConfigError,
    McSettings,
    ScenarioConfig,
    ZcbProduct,
    load_config,
    parse_config,
    serialize_config,
    validate_config,
    with_overrides,
)
from .fd import FdConfig, TridiagonalSystem, assemble_step, solve_tridiagonal, sweep_fd
from .localization import (
    DomainCertificate,
    kernel_lemma_value,
    kernel_mass,
    localize_domain,
)
from .mc import McEstimate, PathConfig, mc_price, simulate_path
from .model import (
    Gaussian,
    GridFunction,
    ModelSpec,
    RelevantDate,
    Timeline,
    TwoPoint,
    affine_model,
    apply_jump_condition,
    general_model,
    lattice_grid,
    log_mgf_neg,
    merge_relevant_dates,
    vasicek,
)
from .results import MaxInTimeError, PriceResult, mean_abs, roi_mask
from .runner import Scenario, build_scenario, convergence_study, run_scenario
from .semianalytic import (
    GreenKernel,
    green_eval,
    green_log,
    propagate_interval,
    sweep_semianalytic,
)

__version__ = "0.1.0"

__all__ = [
    "KNOWN_ENGINES",
    "CallProduct",
    "CallSpec",
    "ConfigError",
    "DomainCertificate",
    "FdConfig",
    "Gaussian",
    "GreenKernel",
    "GridFunction",
    "MaxInTimeError",
    "McEstimate",
    "McSettings",
    "ModelSpec",
    "PathConfig",
    "PriceResult",
    "RelevantDate",
    "Scenario",
    "ScenarioConfig",
    "Timeline",
    "TridiagonalSystem",
    "TwoPoint",
    "ZcbCoefficients",
    "ZcbProduct",
    "affine_model",
    "apply_jump_condition",
    "assemble_step",
    "build_scenario",
    "call_price",
    "call_sigma_c",
    "convergence_study",
    "general_model",
    "green_eval",
    "green_log",
    "integrate_a",
    "kernel_lemma_value",
    "kernel_mass",
    "lattice_grid",
    "load_config",
    "localize_domain",
    "log_mgf_neg",
    "mc_price",
    "mean_abs",
    "merge_relevant_dates",
    "parse_config",
    "propagate_interval",
    "riccati_b",
    "roi_mask",
    "run_scenario",
    "serialize_config",
    "simulate_path",
    "solve_tridiagonal",
    "sweep_fd",
    "sweep_semianalytic",
    "validate_config",
    "vasicek",
    "with_overrides",
    "zcb_coefficients",
    "zcb_price",
]
