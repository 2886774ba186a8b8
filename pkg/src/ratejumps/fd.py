"""Finite-difference engine.

Theta time stepping of the pricing equation on the certified domain.  With L
the space operator

    (L v)_i = (var_i / 2) (v_{i-1} - 2 v_i + v_{i+1}) / dx^2
              + drift_i (v_{i+1} - v_{i-1}) / (2 dx) - x_i v_i ,

one backward step from the known level v^{j+1} to v^j solves

    (I - dt (1 - theta) L) v^j = (I + dt theta L) v^{j+1},

so theta = 1 is the explicit update, theta = 0 fully implicit, theta = 1/2
the trapezoidal average.  The top boundary row drops the diffusion term and
takes a one-sided first derivative (linear-growth closure); the bottom row
collocates the full equation at x_0 with one-sided differences, which couples
v_0 to v_2.  That extra coupling is eliminated against row 1 during assembly
so a single tridiagonal solve per step remains.

The backward sweep walks the relevant dates from the horizon down, restarts
the terminal datum through the jump conditions, and subdivides each inter-date
interval into round(interval / dt) equal steps.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable

import numpy as np
from scipy.linalg import solve_banded, LinAlgError

from .model import GridFunction, ModelSpec, Timeline, apply_jump_condition, lattice_grid
from .results import PriceResult

if TYPE_CHECKING:
    from .localization import DomainCertificate


@dataclass(frozen=True)
class FdConfig:
    theta: float
    dx: float
    dt: float
    domain: "DomainCertificate"

    def __post_init__(self):
        if not (0.0 <= self.theta <= 1.0):
            raise ValueError(f"theta must lie in [0, 1], got {self.theta}")
        if not self.dx > 0.0:
            raise ValueError(f"dx must be positive, got {self.dx}")
        if not self.dt > 0.0:
            raise ValueError(f"dt must be positive, got {self.dt}")


@dataclass
class TridiagonalSystem:
    sub: np.ndarray    # length n - 1
    diag: np.ndarray   # length n
    sup: np.ndarray    # length n - 1
    rhs: np.ndarray    # length n

    def __post_init__(self):
        n = len(self.diag)
        if len(self.sub) != n - 1 or len(self.sup) != n - 1 or len(self.rhs) != n:
            raise ValueError("inconsistent tridiagonal array lengths")


# ---- operator rows ---- #

def _operator_rows(model: ModelSpec, t: float, xs: np.ndarray, dx: float):
    """Full-length sub/diag/sup coefficient arrays of L at time t, plus the
    v_2 coefficient of the bottom boundary row (sub[0] and sup[-1] unused)."""
    drift = np.asarray(model.drift(t, xs), dtype=float)
    var = np.broadcast_to(np.asarray(model.variance(t, xs), dtype=float), xs.shape)
    sub = np.empty_like(xs)
    dia = np.empty_like(xs)
    sup = np.empty_like(xs)
    sub[1:-1] = 0.5 * var[1:-1] / dx**2 - drift[1:-1] / (2.0 * dx)
    dia[1:-1] = -var[1:-1] / dx**2 - xs[1:-1]
    sup[1:-1] = 0.5 * var[1:-1] / dx**2 + drift[1:-1] / (2.0 * dx)
    # top row: no diffusion, one-sided derivative from below
    sub[-1] = -drift[-1] / dx
    dia[-1] = drift[-1] / dx - xs[-1]
    sub[0] = 0.0
    sup[-1] = 0.0
    # bottom row: second difference on (v_0, v_1, v_2), forward drift
    dia[0] = 0.5 * var[0] / dx**2 - drift[0] / dx - xs[0]
    sup[0] = -var[0] / dx**2 + drift[0] / dx
    row0_v2 = 0.5 * var[0] / dx**2
    return sub, dia, sup, row0_v2


def _apply_rows(sub, dia, sup, row0_v2, v):
    out = dia * v
    out[1:] += sub[1:] * v[:-1]
    out[:-1] += sup[:-1] * v[1:]
    out[0] += row0_v2 * v[2]
    return out


def assemble_step(
    model: ModelSpec,
    cfg: FdConfig,
    v_next: GridFunction,
    t_next: float,
    dt: float | None = None,
) -> TridiagonalSystem:
    """System for one backward step ending at the known level v_next = v(t_next).

    The right-hand side applies the explicit part at t_next; the matrix holds
    the implicit part at t_next - dt.  The bottom-row coupling to v_2 is
    folded into tridiagonal form by one elimination against row 1.
    """
    if dt is None:
        dt = cfg.dt
    xs = v_next.xs
    n = len(xs)
    if n < 4:
        raise ValueError(f"domain too small: {n} nodes, need at least 4")
    dx = v_next.dx
    theta = cfg.theta
    v = v_next.vals

    sub_e, dia_e, sup_e, v2_e = _operator_rows(model, t_next, xs, dx)
    rhs = v + dt * theta * _apply_rows(sub_e, dia_e, sup_e, v2_e, v)

    t_new = t_next - dt
    sub_i, dia_i, sup_i, v2_i = _operator_rows(model, t_new, xs, dx)
    w = dt * (1.0 - theta)
    lsub = -w * sub_i
    ldia = 1.0 - w * dia_i
    lsup = -w * sup_i
    l_v2 = -w * v2_i

    if l_v2 != 0.0:
        if lsup[1] == 0.0:
            raise ValueError("zero pivot while folding the bottom boundary row")
        f = l_v2 / lsup[1]
        ldia[0] -= f * lsub[1]
        lsup[0] -= f * ldia[1]
        rhs[0] -= f * rhs[1]

    return TridiagonalSystem(sub=lsub[1:], diag=ldia, sup=lsup[:-1], rhs=rhs)


def solve_tridiagonal(sys: TridiagonalSystem) -> np.ndarray:
    n = len(sys.diag)
    ab = np.zeros((3, n))
    ab[0, 1:] = sys.sup
    ab[1, :] = sys.diag
    ab[2, :-1] = sys.sub
    try:
        return solve_banded((1, 1), ab, sys.rhs)
    except LinAlgError as exc:
        raise ValueError(f"tridiagonal solve hit a zero pivot: {exc}") from exc


# ---- backward sweep ---- #

def _march(model, cfg, xs, v, t_lo, t_hi, observer):
    m = max(1, round((t_hi - t_lo) / cfg.dt))
    dtk = (t_hi - t_lo) / m
    for j in range(m, 0, -1):
        t_top = t_lo + j * dtk
        sys = assemble_step(model, cfg, GridFunction(xs, v), t_top, dtk)
        v = solve_tridiagonal(sys)
        if observer is not None:
            observer(t_top - dtk, v)
    return v, m


def sweep_fd(
    model: ModelSpec,
    timeline: Timeline,
    payoff: Callable[[np.ndarray], np.ndarray],
    cfg: FdConfig,
    observer: Callable[[float, np.ndarray], None] | None = None,
) -> PriceResult:
    """Backward theta sweep from the payoff at the horizon to time zero.

    `observer`, when given, is called with (t, values) at every computed time
    level; the error tables are accumulated that way without storing the full
    surface.
    """
    xs = lattice_grid(cfg.domain.a_lo, cfg.domain.a_hi, cfg.dx)
    if len(xs) < 4:
        raise ValueError(f"domain too small: {len(xs)} nodes, need at least 4")
    if cfg.theta == 1.0:
        worst = float(np.max(np.asarray(model.variance(timeline.maturity, xs))))
        if worst * cfg.dt / cfg.dx**2 > 1.0:
            warnings.warn(
                f"explicit stepping with var*dt/dx^2 = {worst * cfg.dt / cfg.dx**2:.3g} "
                "> 1 is likely unstable",
                RuntimeWarning,
                stacklevel=2,
            )
    started = time.monotonic()
    v = np.asarray(payoff(xs), dtype=float)
    steps = 0
    cur = timeline.maturity
    for date in reversed(timeline.relevant):
        if date.time < cur:
            v, m = _march(model, cfg, xs, v, date.time, cur, observer)
            steps += m
            cur = date.time
        v = apply_jump_condition(GridFunction(xs, v), date.dist, date.numeraire).vals
    if cur > 0.0:
        v, m = _march(model, cfg, xs, v, 0.0, cur, observer)
        steps += m
    meta = {
        "a_lo": float(xs[0]),
        "a_hi": float(xs[-1]),
        "n_nodes": len(xs),
        "theta": cfg.theta,
        "dx": cfg.dx,
        "dt": cfg.dt,
        "steps": steps,
        "wall_time_s": time.monotonic() - started,
    }
    return PriceResult(method="fd", xs=xs, values=v, metadata=meta)
