"""Market model primitives.

Short-rate dynamics with announced discontinuities:

    dx_t = mu(t, x_t) dt + sigma(t, x_t) dW_t + jumps at fixed dates

Jumps of random size hit the rate at known calendar dates (think scheduled
policy meetings), and the discounting account rolls over at another set of
known dates, picking up a factor e^{rate} there.  Discounting therefore runs
against a measure that is Lebesgue time plus a unit point mass at every
roll-over date.  Whenever a backward solver crosses one of these "relevant
dates" the solution must be restarted from a transformed terminal datum:

* roll-over date:            f(t-, x) = e^{-x} f(t, x)
* rate-jump date:            f(t-, x) = E[f(t, x + xi)]
* both on the same date:     f(t-, x) = E[e^{-(x + xi)} f(t, x + xi)]

This module holds the model/timeline value types, the jump-size
distributions with their log moment generating function, and the grid
implementation of the three restart conditions used by every sweep engine.

In the affine case the coefficients are

    mu(t, x) = alpha(t) + beta(t) x,      sigma^2(t, x) = gamma(t) + delta(t) x,

and the constant-coefficient Vasicek model is the special case
alpha, beta, sigma constant with delta = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

VASICEK = "vasicek"
AFFINE = "affine"
GENERAL = "general"

# date kinds, derived from the RelevantDate fields
ROLLOVER_ONLY = "rollover"
RATE_JUMP_ONLY = "rate_jump"
BOTH = "both"

_MERGE_TOL = 1e-12


# --------------------------------------------------------------------------- #
#  jump-size distributions
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class Gaussian:
    """Normally distributed jump size with mean `mean` and deviation `std`."""

    mean: float
    std: float

    def __post_init__(self):
        if not (self.std >= 0.0):
            raise ValueError(f"Gaussian jump needs std >= 0, got {self.std}")


@dataclass(frozen=True)
class TwoPoint:
    """Jump of +size with probability p_up and -size with probability 1 - p_up."""

    size: float
    p_up: float

    def __post_init__(self):
        if not (0.0 <= self.p_up <= 1.0):
            raise ValueError(f"TwoPoint jump needs p_up in [0, 1], got {self.p_up}")


JumpDistribution = Gaussian | TwoPoint


def log_mgf_neg(dist: JumpDistribution, b: float) -> float:
    """log E[exp(-xi * b)] for a jump size xi drawn from `dist`.

    This is the quantity by which the bond exponent shifts across a rate-jump
    date.  The two-point branch is evaluated in log space so large m*b cannot
    overflow.
    """
    b = float(b)
    if isinstance(dist, Gaussian):
        return -dist.mean * b + 0.5 * (dist.std * b) ** 2
    if isinstance(dist, TwoPoint):
        if dist.p_up <= 0.0:
            return dist.size * b
        if dist.p_up >= 1.0:
            return -dist.size * b
        return float(
            np.logaddexp(
                math.log(dist.p_up) - dist.size * b,
                math.log1p(-dist.p_up) + dist.size * b,
            )
        )
    raise TypeError(f"not a jump distribution: {dist!r}")


# --------------------------------------------------------------------------- #
#  model specification
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class ModelSpec:
    """Short-rate dynamics.

    For affine kinds the four coefficient callables define drift and squared
    volatility; for the general kind `mu_fn` and `sigma_fn` are used directly
    and the affine coefficients are unused.
    """

    alpha: Callable[[float], float]
    beta: Callable[[float], float]
    gamma: Callable[[float], float]
    delta: Callable[[float], float]
    kind: str
    params: tuple[float, ...] = ()
    mu_fn: Callable | None = None
    sigma_fn: Callable | None = None

    def drift(self, t: float, x):
        if self.kind == GENERAL:
            return self.mu_fn(t, x)
        return self.alpha(t) + self.beta(t) * np.asarray(x, dtype=float)

    def variance(self, t: float, x):
        """sigma^2(t, x); raises if the affine form turns negative anywhere."""
        if self.kind == GENERAL:
            s = np.asarray(self.sigma_fn(t, x), dtype=float)
            return s * s
        v = self.gamma(t) + self.delta(t) * np.asarray(x, dtype=float)
        if np.any(np.asarray(v) < 0.0):
            raise ValueError(
                f"squared volatility gamma + delta*x is negative at t={t}"
            )
        return v


def vasicek(alpha: float, beta: float, sigma: float) -> ModelSpec:
    """Constant-coefficient model dx = (alpha + beta x) dt + sigma dW."""
    if not sigma > 0.0:
        raise ValueError(f"vasicek needs sigma > 0, got {sigma}")
    if beta == 0.0:
        raise ValueError("vasicek needs beta != 0")
    a, b, s = float(alpha), float(beta), float(sigma)
    s2 = s * s
    return ModelSpec(
        alpha=lambda t: a,
        beta=lambda t: b,
        gamma=lambda t: s2,
        delta=lambda t: 0.0,
        kind=VASICEK,
        params=(a, b, s),
    )


def affine_model(alpha, beta, gamma, delta=None) -> ModelSpec:
    """Time-dependent affine model from coefficient callables."""
    if delta is None:
        delta = lambda t: 0.0
    return ModelSpec(alpha=alpha, beta=beta, gamma=gamma, delta=delta, kind=AFFINE)


def general_model(mu, sigma) -> ModelSpec:
    """Arbitrary dynamics from drift and volatility callables (t, x) -> value."""
    zero = lambda t: 0.0
    return ModelSpec(
        alpha=zero, beta=zero, gamma=zero, delta=zero,
        kind=GENERAL, mu_fn=mu, sigma_fn=sigma,
    )


def vasicek_params(model: ModelSpec) -> tuple[float, float, float]:
    """(alpha, beta, sigma) of a constant-coefficient model."""
    if model.kind != VASICEK:
        raise ValueError(f"constant-coefficient model required, got kind={model.kind!r}")
    return model.params


# --------------------------------------------------------------------------- #
#  timeline
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class RelevantDate:
    """A date where a backward sweep restarts; dist is None for pure roll-overs."""

    time: float
    dist: JumpDistribution | None
    numeraire: bool

    @property
    def kind(self) -> str:
        if self.dist is None:
            return ROLLOVER_ONLY
        return BOTH if self.numeraire else RATE_JUMP_ONLY


@dataclass(frozen=True)
class Timeline:
    rate_jumps: tuple[tuple[float, JumpDistribution], ...]
    rollovers: tuple[float, ...]
    maturity: float
    relevant: tuple[RelevantDate, ...]

    def truncated(self, maturity: float) -> "Timeline":
        """The same schedule cut down to a shorter horizon."""
        jumps = [(s, d) for s, d in self.rate_jumps if s <= maturity]
        rolls = [t for t in self.rollovers if t <= maturity]
        return merge_relevant_dates(jumps, rolls, maturity)

    def jump_dists(self) -> tuple[JumpDistribution, ...]:
        return tuple(d for _, d in self.rate_jumps)


def _check_dates(times: Sequence[float], label: str) -> None:
    prev = 0.0
    for t in times:
        if not t > 0.0:
            raise ValueError(f"{label} date {t} is not strictly positive")
        if t <= prev:
            raise ValueError(f"{label} dates must be strictly increasing, got {t} after {prev}")
        prev = t


def merge_relevant_dates(
    rate_jumps: Sequence[tuple[float, JumpDistribution]],
    rollovers: Sequence[float],
    maturity: float,
) -> Timeline:
    """Merge jump and roll-over schedules into the sorted relevant-date list.

    Dates beyond the maturity are dropped, a date equal to the maturity is
    kept, and a date appearing in both schedules becomes a single entry of
    kind "both".
    """
    if not maturity > 0.0:
        raise ValueError(f"maturity must be positive, got {maturity}")
    jump_times = [s for s, _ in rate_jumps]
    _check_dates(jump_times, "rate-jump")
    _check_dates(rollovers, "roll-over")

    kept_jumps = tuple((s, d) for s, d in rate_jumps if s <= maturity)
    kept_rolls = tuple(t for t in rollovers if t <= maturity)

    events = [(s, d, False) for s, d in kept_jumps] + [(t, None, True) for t in kept_rolls]
    events.sort(key=lambda e: e[0])

    relevant: list[RelevantDate] = []
    for t, dist, numer in events:
        if relevant and abs(t - relevant[-1].time) <= _MERGE_TOL:
            last = relevant[-1]
            relevant[-1] = RelevantDate(
                time=last.time,
                dist=last.dist if dist is None else dist,
                numeraire=last.numeraire or numer,
            )
        else:
            relevant.append(RelevantDate(time=t, dist=dist, numeraire=numer))

    return Timeline(
        rate_jumps=kept_jumps,
        rollovers=kept_rolls,
        maturity=float(maturity),
        relevant=tuple(relevant),
    )


# --------------------------------------------------------------------------- #
#  grid functions and the restart conditions
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class GridFunction:
    """Nodal values of f(t, .) on a strictly increasing grid."""

    xs: np.ndarray
    vals: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        vals = np.asarray(self.vals, dtype=float)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "vals", vals)
        if xs.ndim != 1 or vals.ndim != 1 or len(xs) != len(vals):
            raise ValueError("xs and vals must be 1-d arrays of equal length")
        if len(xs) < 3:
            raise ValueError(f"grid needs at least 3 nodes, got {len(xs)}")
        d = np.diff(xs)
        if np.any(d <= 0.0):
            raise ValueError("grid nodes must be strictly increasing")
        step = (xs[-1] - xs[0]) / (len(xs) - 1)
        object.__setattr__(self, "_step", step)
        object.__setattr__(self, "_uniform", bool(np.max(np.abs(d - step)) < 1e-12 * step))

    @property
    def uniform(self) -> bool:
        return self._uniform

    @property
    def dx(self) -> float:
        if not self._uniform:
            raise ValueError("grid is not uniform")
        return self._step


def lattice_grid(a_lo: float, a_hi: float, dx: float) -> np.ndarray:
    """Uniform grid of spacing dx covering [a_lo, a_hi], snapped outward so the
    nodes sit on integer multiples of dx (which keeps grids of different
    resolutions nested)."""
    if not dx > 0.0:
        raise ValueError(f"dx must be positive, got {dx}")
    i0 = math.floor(a_lo / dx + 1e-9)
    i1 = math.ceil(a_hi / dx - 1e-9)
    return np.arange(i0, i1 + 1) * dx


def _shifted(vals: np.ndarray, k: int) -> np.ndarray:
    """vals evaluated k nodes to the right, clamped at the ends."""
    if k == 0:
        return vals.copy()
    out = np.empty_like(vals)
    if k > 0:
        out[:-k] = vals[k:]
        out[-k:] = vals[-1]
    else:
        out[-k:] = vals[:k]
        out[:-k] = vals[0]
    return out


def _convolve_gaussian(xs: np.ndarray, vals: np.ndarray, dx: float, dist: Gaussian) -> np.ndarray:
    m, g = dist.mean, dist.std
    if g < 0.5 * dx:
        # the grid cannot resolve the density; treat it as a point mass at the
        # mean and clamp evaluation outside the domain to the boundary value
        return np.interp(xs + m, xs, vals)
    n = len(xs)
    offs = np.arange(-(n - 1), n) * dx
    kern = np.exp(-0.5 * ((offs - m) / g) ** 2) * (dx / (g * math.sqrt(2.0 * math.pi)))
    w = np.ones(n)
    w[0] = w[-1] = 0.5
    # out[i] = sum_j vals[j] w[j] phi(x_j - x_i - m) dx, with tails outside the
    # domain neglected; the neglected mass is controlled by the localization
    # certificate
    return np.convolve(vals * w, kern[::-1])[n - 1 : 2 * n - 1]


def _shift_two_point(xs: np.ndarray, vals: np.ndarray, dx: float, dist: TwoPoint) -> np.ndarray:
    c = dist.size / dx
    ci = round(c)
    if abs(c - ci) > 1e-9 * max(1.0, abs(c)):
        raise ValueError(
            f"two-point jump size {dist.size} is not an integer number of grid "
            f"steps (size/dx = {c}); choose dx so the shift lands on nodes"
        )
    up = _shifted(vals, ci)
    dn = _shifted(vals, -ci)
    return dist.p_up * up + (1.0 - dist.p_up) * dn


def apply_jump_condition(
    f_after: GridFunction,
    dist: JumpDistribution | None = None,
    numeraire: bool = False,
) -> GridFunction:
    """Pull a terminal datum back across a relevant date.

    `f_after` holds f(t, .) on the working domain; the result holds f(t-, .)
    on the same grid.  With `numeraire` set the values are first multiplied by
    e^{-x}; with a distribution given they are then integrated against the
    jump density (trapezoidal convolution for Gaussian sizes, the exact
    two-node average for two-point sizes, which requires the jump size to be
    grid aligned).
    """
    xs = f_after.xs
    vals = np.exp(-xs) * f_after.vals if numeraire else f_after.vals
    if dist is None:
        return GridFunction(xs, vals) if numeraire else f_after
    if not f_after.uniform:
        raise ValueError("jump integration needs a uniform grid")
    dx = f_after.dx
    if isinstance(dist, Gaussian):
        out = _convolve_gaussian(xs, vals, dx, dist)
    elif isinstance(dist, TwoPoint):
        out = _shift_two_point(xs, vals, dx, dist)
    else:
        raise TypeError(f"not a jump distribution: {dist!r}")
    return GridFunction(xs, out)
