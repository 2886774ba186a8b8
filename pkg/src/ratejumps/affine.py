"""Closed-form engine for affine dynamics.

Between relevant dates the bond price is exponential affine,

    P_T(t, x) = exp(-a(t) - x b(t)),

where b solves a scalar Riccati equation backward from b(T) = 0 and a is an
integral of b against the model coefficients.  Crossing a roll-over date
shifts b by +1 (b is continuous at rate-jump dates), and crossing a rate-jump
date shifts a by minus the log moment generating function of the jump size
evaluated at -b (a is continuous at roll-over dates).

For the constant-coefficient Vasicek model both coefficients are evaluated
from explicit formulas; otherwise b is integrated numerically piece by piece
and a by composite Simpson quadrature.  On top of the bond price the module
prices a European call on a zero-coupon bond when all jump sizes before the
option expiry are Gaussian: the rate at expiry is then normal and the price
reduces to a Black-style formula with an effective volatility sigma_c that
collects the diffusion variance plus one term per jump date.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import erfc

from .model import (
    VASICEK,
    GENERAL,
    Gaussian,
    ModelSpec,
    Timeline,
    log_mgf_neg,
    vasicek_params,
)

_RICCATI_BLOWUP = 1e8
_RICCATI_H_FACTOR = 1e-4
_SIGMA_C_FLOOR = 1e-14
_SIMPSON_SUBDIV = 256  # panels per smooth piece of the a-integral


def _require_closed_form(model: ModelSpec, timeline: Timeline) -> None:
    if model.kind == GENERAL:
        raise ValueError("closed-form engine needs affine dynamics")
    for d in timeline.relevant:
        if d.dist is not None and d.numeraire:
            raise ValueError(
                "closed-form engine does not handle a rate jump and a roll-over "
                "on the same date; use a sweep engine"
            )
        if d.time == timeline.maturity:
            raise ValueError(
                "closed-form engine needs all relevant dates strictly before "
                "the horizon; use a sweep engine"
            )


# --------------------------------------------------------------------------- #
#  the slope coefficient b(t, T)
# --------------------------------------------------------------------------- #

class _VasicekB:
    """b(t) = (e^{beta (T-t)} - 1)/beta + sum over later roll-overs of e^{beta (t_n - t)}."""

    def __init__(self, beta: float, maturity: float, rollovers):
        self.beta = beta
        self.maturity = maturity
        self.rollovers = tuple(rollovers)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = (np.exp(self.beta * (self.maturity - t)) - 1.0) / self.beta
        for tn in self.rollovers:
            out = out + np.where(t < tn, np.exp(self.beta * (tn - t)), 0.0)
        return float(out) if out.ndim == 0 else out


class _NumericB:
    """Piecewise Riccati solution stored as dense nodes with cubic Hermite
    evaluation between them."""

    def __init__(self, pieces, boundaries):
        self.pieces = pieces          # list of (ts, bs, ds) per piece, ascending
        self.boundaries = boundaries  # interior roll-over times, ascending

    def __call__(self, t):
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty_like(t_arr)
        idx = np.searchsorted(self.boundaries, t_arr, side="right")
        for k, (ts, bs, ds) in enumerate(self.pieces):
            sel = idx == k
            if not np.any(sel):
                continue
            tq = t_arr[sel]
            j = np.clip(np.searchsorted(ts, tq, side="right") - 1, 0, len(ts) - 2)
            h = ts[j + 1] - ts[j]
            s = (tq - ts[j]) / h
            h00 = (1 + 2 * s) * (1 - s) ** 2
            h10 = s * (1 - s) ** 2
            h01 = s * s * (3 - 2 * s)
            h11 = s * s * (s - 1)
            out[sel] = h00 * bs[j] + h10 * h * ds[j] + h01 * bs[j + 1] + h11 * h * ds[j + 1]
        return float(out[0]) if np.isscalar(t) or np.asarray(t).ndim == 0 else out


def _riccati_rhs(model: ModelSpec, t: float, b: float) -> float:
    # b'(t) = -1 - beta(t) b + delta(t) b^2 / 2
    return -1.0 - model.beta(t) * b + 0.5 * model.delta(t) * b * b


def _integrate_piece(model: ModelSpec, lo: float, hi: float, b_end: float):
    """Classic fourth-order sweep of the Riccati equation backward over
    [lo, hi] starting from b(hi) = b_end; returns ascending node data."""
    length = hi - lo
    n = max(2, math.ceil(1.0 / _RICCATI_H_FACTOR))
    h = -length / n
    ts = np.empty(n + 1)
    bs = np.empty(n + 1)
    ts[n] = hi
    bs[n] = b_end
    t, b = hi, b_end
    for i in range(n, 0, -1):
        k1 = _riccati_rhs(model, t, b)
        k2 = _riccati_rhs(model, t + 0.5 * h, b + 0.5 * h * k1)
        k3 = _riccati_rhs(model, t + 0.5 * h, b + 0.5 * h * k2)
        k4 = _riccati_rhs(model, t + h, b + h * k3)
        b = b + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t = lo + (i - 1) * (length / n)
        if not (abs(b) <= _RICCATI_BLOWUP):
            raise ValueError(
                f"Riccati solution blew up on [{lo}, {hi}] (|b| > {_RICCATI_BLOWUP:g})"
            )
        ts[i - 1] = t
        bs[i - 1] = b
    ds = np.array([_riccati_rhs(model, ti, bi) for ti, bi in zip(ts, bs)])
    return ts, bs, ds


def riccati_b(model: ModelSpec, timeline: Timeline) -> Callable:
    """The slope coefficient b(t, T) as a callable of t (scalar or array).

    Solved piecewise backward from b(T) = 0 with the +1 restart at each
    roll-over date; constant-coefficient models use the explicit formula.
    """
    _require_closed_form(model, timeline)
    T = timeline.maturity
    rolls = [d.time for d in timeline.relevant if d.numeraire]

    if model.kind == VASICEK:
        _, beta, _ = vasicek_params(model)
        return _VasicekB(beta, T, rolls)

    boundaries = np.array(rolls)
    edges = [0.0] + rolls + [T]
    pieces = [None] * (len(edges) - 1)
    b_end = 0.0
    for k in range(len(edges) - 2, -1, -1):
        ts, bs, ds = _integrate_piece(model, edges[k], edges[k + 1], b_end)
        pieces[k] = (ts, bs, ds)
        b_end = bs[0] + 1.0  # restart across the roll-over below this piece
    return _NumericB(pieces, boundaries)


# --------------------------------------------------------------------------- #
#  the intercept coefficient a(t, T)
# --------------------------------------------------------------------------- #

def _simpson(fvals: np.ndarray, h: float) -> float:
    w = np.ones(len(fvals))
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return float(np.dot(w, fvals) * h / 3.0)


def _eval_coeff(fn, us: np.ndarray) -> np.ndarray:
    try:
        out = np.asarray(fn(us), dtype=float)
        if out.shape == us.shape:
            return out
    except (TypeError, ValueError):
        pass
    return np.fromiter((fn(u) for u in us), dtype=float, count=len(us))


class _SimpsonA:
    def __init__(self, model: ModelSpec, timeline: Timeline, b: Callable):
        self.model = model
        self.maturity = timeline.maturity
        self.rolls = [d.time for d in timeline.relevant if d.numeraire]
        self.jumps = [(d.time, d.dist) for d in timeline.relevant if d.dist is not None]
        self.b = b

    def __call__(self, t) -> float:
        t = float(t)
        T = self.maturity
        if t >= T:
            return 0.0
        cuts = [t] + [r for r in self.rolls if t < r < T] + [T]
        total = 0.0
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            us = np.linspace(lo, hi, 2 * _SIMPSON_SUBDIV + 1)
            # b is right-continuous, so evaluating at the top end of a piece
            # that closes with a roll-over would read the wrong branch; nudge
            # the last node inside
            us[-1] = max(hi - 1e-12 * max(hi - lo, 1.0), us[-2])
            bs = np.asarray(self.b(us))
            av = _eval_coeff(self.model.alpha, us)
            gv = _eval_coeff(self.model.gamma, us)
            total += _simpson(av * bs - 0.5 * gv * bs * bs, (hi - lo) / (2 * _SIMPSON_SUBDIV))
        for s, dist in self.jumps:
            if t < s:
                total -= log_mgf_neg(dist, float(self.b(s)))
        return total


def integrate_a(model: ModelSpec, timeline: Timeline, b: Callable) -> Callable:
    """a(t, T) = int_t^T [alpha b - gamma b^2 / 2] du  -  sum of jump-date
    log-MGF terms, with the quadrature split at roll-over dates where b is
    discontinuous."""
    _require_closed_form(model, timeline)
    return _SimpsonA(model, timeline, b)


class _VasicekA:
    """Explicit a(t, T) for constant coefficients: the no-date formula plus
    one correction per roll-over date, a cross term per pair of roll-over
    dates, and one log-MGF term per jump date."""

    def __init__(self, model: ModelSpec, timeline: Timeline, b: Callable):
        self.alpha, self.beta, self.sigma = vasicek_params(model)
        self.maturity = timeline.maturity
        self.rolls = [d.time for d in timeline.relevant if d.numeraire]
        self.jumps = [(d.time, d.dist) for d in timeline.relevant if d.dist is not None]
        self.b = b

    def __call__(self, t) -> float:
        t = float(t)
        al, be, sg = self.alpha, self.beta, self.sigma
        T = self.maturity
        s2 = sg * sg
        tau = T - t
        B = (math.exp(be * tau) - 1.0) / be
        a = (al / be) * (B - tau) - (s2 / (2.0 * be * be)) * ((be / 2.0) * B * B - B + tau)
        rolls = [tn for tn in self.rolls if t < tn]
        for tn in rolls:
            Bn = (math.exp(be * (tn - t)) - 1.0) / be
            a += (al + s2 / be) * Bn
            a -= 0.5 * s2 * (
                (math.exp(be * (T + tn - 2.0 * t)) - math.exp(be * (T - tn))) / (be * be)
                + (math.exp(2.0 * be * (tn - t)) - 1.0) / (2.0 * be)
            )
        for i, tn in enumerate(rolls):
            for tl in rolls[i + 1:]:
                a -= s2 * (
                    math.exp(be * (tn + tl - 2.0 * t)) - math.exp(be * (tl - tn))
                ) / (2.0 * be)
        for s, dist in self.jumps:
            if t < s:
                a -= log_mgf_neg(dist, float(self.b(s)))
        return a


# --------------------------------------------------------------------------- #
#  bond and option prices
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class ZcbCoefficients:
    breakpoints: tuple[float, ...]
    b_eval: Callable
    a_eval: Callable
    maturity: float


def zcb_coefficients(model: ModelSpec, timeline: Timeline) -> ZcbCoefficients:
    b = riccati_b(model, timeline)
    if model.kind == VASICEK:
        a = _VasicekA(model, timeline, b)
    else:
        a = integrate_a(model, timeline, b)
    bps = tuple(d.time for d in timeline.relevant) + (timeline.maturity,)
    return ZcbCoefficients(breakpoints=bps, b_eval=b, a_eval=a, maturity=timeline.maturity)


def zcb_price(coeffs: ZcbCoefficients, t: float, x):
    """exp(-a(t) - x b(t)); x may be a scalar or an array."""
    if t > coeffs.maturity:
        raise ValueError(f"t={t} is past the bond maturity {coeffs.maturity}")
    a = coeffs.a_eval(t)
    b = coeffs.b_eval(t)
    out = np.exp(-a - np.asarray(x, dtype=float) * b)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class CallSpec:
    """European call with strike `strike` on a zero-coupon bond maturing at
    `bond_maturity`, exercised at `expiry`."""

    strike: float
    expiry: float
    bond_maturity: float

    def __post_init__(self):
        if not self.strike > 0.0:
            raise ValueError(f"strike must be positive, got {self.strike}")
        if not (0.0 < self.expiry < self.bond_maturity):
            raise ValueError(
                f"need 0 < expiry < bond maturity, got {self.expiry}, {self.bond_maturity}"
            )


def _norm_cdf(z):
    return 0.5 * erfc(-z / math.sqrt(2.0))


def call_sigma_c(model: ModelSpec, timeline: Timeline, spec: CallSpec, t: float) -> float:
    """Effective volatility of the bond call over [t, expiry].

    Diffusion contributes (sigma^2/2beta)(e^{2 beta (T-t)} - 1); every Gaussian
    jump date strictly inside (t, T) adds gamma_j^2 e^{2 beta (T - s_j)}.  The
    whole square root is scaled by b(T, S) taken from the full schedule up to
    the bond maturity.
    """
    _, be, sg = vasicek_params(model)
    if timeline.maturity != spec.bond_maturity:
        raise ValueError("timeline must extend to the bond maturity")
    T = spec.expiry
    if t > T:
        raise ValueError(f"t={t} is past the option expiry {T}")
    var = (sg * sg / (2.0 * be)) * (math.exp(2.0 * be * (T - t)) - 1.0)
    for s, dist in timeline.rate_jumps:
        if t < s < T:
            if not isinstance(dist, Gaussian):
                raise ValueError(
                    "no closed form with a non-Gaussian jump before expiry; "
                    "use a sweep engine"
                )
            var += dist.std ** 2 * math.exp(2.0 * be * (T - s))
    b_TS = float(riccati_b(model, timeline)(T))
    return b_TS * math.sqrt(var)


def call_price(
    model: ModelSpec,
    timeline: Timeline,
    spec: CallSpec,
    t: float,
    x,
    meta: dict | None = None,
):
    """Closed-form price of the bond call at (t, x); x scalar or array.

    Valid for constant coefficients with Gaussian jump sizes before expiry.
    When the effective volatility degenerates to zero the deterministic limit
    max(P_S - K P_T, 0) is returned and flagged in `meta`.
    """
    if timeline.maturity != spec.bond_maturity:
        raise ValueError("timeline must extend to the bond maturity")
    if t > spec.expiry:
        raise ValueError(f"t={t} is past the option expiry {spec.expiry}")
    coeffs_S = zcb_coefficients(model, timeline)
    P_S = zcb_price(coeffs_S, t, x)
    if t == spec.expiry:
        out = np.maximum(np.asarray(P_S) - spec.strike, 0.0)
        return float(out) if out.ndim == 0 else out
    coeffs_T = zcb_coefficients(model, timeline.truncated(spec.expiry))
    P_T = zcb_price(coeffs_T, t, x)
    sc = call_sigma_c(model, timeline, spec, t)
    if sc <= _SIGMA_C_FLOOR:
        if meta is not None:
            meta["degenerate_sigma_c"] = True
        out = np.maximum(np.asarray(P_S) - spec.strike * np.asarray(P_T), 0.0)
        return float(out) if out.ndim == 0 else out
    d1 = np.log(np.asarray(P_S) / (np.asarray(P_T) * spec.strike)) / sc + 0.5 * sc
    d2 = d1 - sc
    out = np.asarray(P_S) * _norm_cdf(d1) - spec.strike * np.asarray(P_T) * _norm_cdf(d2)
    return float(out) if out.ndim == 0 else out
