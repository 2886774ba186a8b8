"""Computational-domain selection.

The sweep engines work on a bounded domain [a_lo, a_hi] that must be wide
enough that what the true solution does outside cannot contaminate the region
of interest [x_min, x_max].  Two mass conditions control this:

* kernel condition: the weighted kernel integral
      int G(tau; x, xi) e^{(xi - x)/beta} dxi
  has the explicit value e^{(sigma^2/(2 beta^2) + alpha/beta) tau}, so a
  margin M can be certified by checking that trapezoidal quadrature truncated
  to the candidate domain reproduces that value at the requested tolerance.
  The check runs over x on a grid spanning the whole candidate domain, making
  the certificate self-consistent: values near the edge of the widened domain
  are themselves computed from quadratures that stay inside it.

* jump condition: convolving with a Gaussian jump density reads values a few
  deviations away from every point where the convolution is evaluated, so the
  domain is widened further by a margin covering the density mass up to the
  jump tolerance.  Two-point jumps shift by a fixed amount instead and use
  the rule of three jump sizes.

The certificate records both neglected-mass bounds so downstream results can
carry them as metadata.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .model import GENERAL, Gaussian, ModelSpec, Timeline, TwoPoint, vasicek_params
from .semianalytic import GreenKernel, green_log

_TRAPZ = getattr(np, "trapezoid", None) or np.trapz
_KERNEL_GRID = 33
_QUAD_NODES = 20001
_BISECT_RESOLUTION = 1e-3
_BRACKET_LIMIT = 50.0

DEFAULT_TOL_KERNEL = 1e-7
DEFAULT_TOL_JUMP = 1e-12


@dataclass(frozen=True)
class DomainCertificate:
    a_lo: float
    a_hi: float
    x_min: float
    x_max: float
    eps_kernel: float
    eps_jump: float
    M: float
    M_bar: float
    horizon: float = float("nan")
    tol_kernel: float = float("nan")
    tol_jump: float = float("nan")
    heuristic: bool = False

    def __post_init__(self):
        if not (self.a_lo < self.x_min <= self.x_max < self.a_hi):
            raise ValueError(
                f"domain [{self.a_lo}, {self.a_hi}] does not strictly contain "
                f"the region of interest [{self.x_min}, {self.x_max}]"
            )

    def as_metadata(self) -> dict:
        return {
            "a_lo": self.a_lo,
            "a_hi": self.a_hi,
            "x_min": self.x_min,
            "x_max": self.x_max,
            "eps_kernel": self.eps_kernel,
            "eps_jump": self.eps_jump,
            "M": self.M,
            "M_bar": self.M_bar,
            "horizon": self.horizon,
            "heuristic": self.heuristic,
        }


def kernel_lemma_value(model: ModelSpec, dt: float) -> float:
    """Exact value of the weighted kernel integral over the whole line."""
    al, be, sg = vasicek_params(model)
    return math.exp((sg * sg / (2.0 * be * be) + al / be) * dt)


def kernel_mass(
    model: ModelSpec,
    t: float,
    s: float,
    x,
    lo: float,
    hi: float,
    n_nodes: int = _QUAD_NODES,
):
    """Trapezoidal value of int_lo^hi G(t, s; x, xi) e^{(xi - x)/beta} dxi.

    Accepts an array of x values (one quadrature per entry)."""
    if not s > t:
        raise ValueError(f"need s > t, got t={t}, s={s}")
    if not hi > lo:
        raise ValueError(f"need lo < hi, got {lo}, {hi}")
    _, be, _ = vasicek_params(model)
    kern = GreenKernel.from_model(model)
    x = np.asarray(x, dtype=float)
    xi = np.linspace(lo, hi, n_nodes)
    logs = green_log(kern, s - t, x[..., None], xi) + (xi - x[..., None]) / be
    out = _TRAPZ(np.exp(logs), xi, axis=-1)
    return float(out) if out.ndim == 0 else out


def _kernel_margin_ok(model, horizon, x_min, x_max, M, tol, exact) -> bool:
    lo, hi = x_min - M, x_max + M
    xs = np.linspace(lo, hi, _KERNEL_GRID)
    masses = kernel_mass(model, 0.0, horizon, xs, lo, hi)
    return bool(np.all(np.abs(masses - exact) <= tol * exact))


def _localize_heuristic(model, x_min, x_max) -> DomainCertificate:
    # no kernel in closed form: fall back to the stationary range of the
    # drift, eight stationary deviations wide, and flag the certificate
    x0 = 0.5 * (x_min + x_max)
    root = x0
    for _ in range(60):
        h = 1e-6 * max(1.0, abs(root))
        f = float(np.asarray(model.drift(0.0, root)))
        fp = (float(np.asarray(model.drift(0.0, root + h))) - f) / h
        if fp == 0.0:
            break
        step = f / fp
        root -= step
        if abs(step) < 1e-10:
            break
    if not np.isfinite(root):
        root = x0
    h = 1e-6 * max(1.0, abs(root))
    kappa = -(float(np.asarray(model.drift(0.0, root + h)))
              - float(np.asarray(model.drift(0.0, root - h)))) / (2.0 * h)
    if not (kappa > 0.0):
        kappa = 1.0
    sd = math.sqrt(float(np.asarray(model.variance(0.0, root))) / (2.0 * kappa))
    band = 8.0 * sd
    a_lo = min(root - band, x_min - sd)
    a_hi = max(root + band, x_max + sd)
    return DomainCertificate(
        a_lo=a_lo, a_hi=a_hi, x_min=x_min, x_max=x_max,
        eps_kernel=float("nan"), eps_jump=float("nan"),
        M=band, M_bar=0.0, heuristic=True,
    )


def localize_domain(
    model: ModelSpec,
    timeline: Timeline,
    x_min: float,
    x_max: float,
    horizon: float,
    tol: float = DEFAULT_TOL_KERNEL,
    tol_jump: float = DEFAULT_TOL_JUMP,
) -> DomainCertificate:
    """Certified computational domain for a sweep over [0, horizon].

    Bisects for the smallest kernel margin M (resolution 1e-3) satisfying the
    self-consistent mass condition at the sweep horizon, then widens by the
    jump margin: additively for Gaussian jumps (margin |m| + std * z where z
    splits tol_jump over the two tails), and by max(M, 3 |m|) for two-point
    jumps.
    """
    if not x_max >= x_min:
        raise ValueError(f"need x_min <= x_max, got {x_min}, {x_max}")
    if not (0.0 < tol <= 1e-2):
        raise ValueError(f"kernel tolerance must lie in (0, 1e-2], got {tol}")
    if not horizon > 0.0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    if model.kind == GENERAL:
        return _localize_heuristic(model, x_min, x_max)

    exact = kernel_lemma_value(model, horizon)

    def ok(M: float) -> bool:
        return _kernel_margin_ok(model, horizon, x_min, x_max, M, tol, exact)

    if ok(0.0):
        M = 0.0
    else:
        hi = 1.0
        while not ok(hi):
            hi *= 2.0
            if hi > _BRACKET_LIMIT:
                raise RuntimeError(
                    f"kernel margin did not certify below {_BRACKET_LIMIT} "
                    f"rate units at tolerance {tol:g}"
                )
        lo = 0.0
        while hi - lo > _BISECT_RESOLUTION:
            mid = 0.5 * (lo + hi)
            if ok(mid):
                hi = mid
            else:
                lo = mid
        M = hi

    z_tail = float(ndtri(1.0 - 0.5 * tol_jump))
    gauss_ext = 0.0
    tp_ext = 0.0
    gaussians: list[Gaussian] = []
    for _, dist in timeline.rate_jumps:
        if isinstance(dist, Gaussian):
            gaussians.append(dist)
            gauss_ext = max(gauss_ext, abs(dist.mean) + dist.std * z_tail)
        elif isinstance(dist, TwoPoint):
            tp_ext = max(tp_ext, 3.0 * abs(dist.size))
    M_bar = max(gauss_ext, tp_ext)
    ext = max(M + gauss_ext, tp_ext, M)
    if ext <= 0.0:
        ext = max(_BISECT_RESOLUTION, 1e-3)

    a_lo = x_min - ext
    a_hi = x_max + ext

    roi = np.linspace(x_min, x_max, _KERNEL_GRID)
    eps_kernel = float(np.max(np.abs(kernel_mass(model, 0.0, horizon, roi, a_lo, a_hi) - exact)))

    # worst neglected Gaussian mass when convolving from the kernel band
    eps_jump = 0.0
    for dist in gaussians:
        if dist.std == 0.0:
            continue
        lo_tail = float(ndtr((a_lo - (x_min - M) - dist.mean) / dist.std))
        hi_tail = float(ndtr(-(a_hi - (x_max + M) - dist.mean) / dist.std))
        eps_jump = max(eps_jump, lo_tail + hi_tail)

    return DomainCertificate(
        a_lo=a_lo, a_hi=a_hi, x_min=x_min, x_max=x_max,
        eps_kernel=eps_kernel, eps_jump=eps_jump,
        M=M, M_bar=M_bar,
        horizon=horizon, tol_kernel=tol, tol_jump=tol_jump,
    )
