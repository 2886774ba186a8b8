"""Scenario driver.

Builds the model, schedule, payoff and certified domain out of a scenario
config, prices with every requested engine, cross-checks the overlapping
engines against each other, and writes the comparison tables as CSV.  The
closed form, when the scenario admits one, doubles as the error reference;
otherwise a fine semi-analytic sweep stands in as the benchmark.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .affine import CallSpec, call_price, zcb_coefficients, zcb_price
from .config import (
    CallProduct,
    ScenarioConfig,
    ZcbProduct,
    load_config,
    validate_config,
)
from .fd import FdConfig, sweep_fd
from .localization import DomainCertificate, localize_domain
from .mc import PathConfig, mc_price
from .model import ModelSpec, Timeline, lattice_grid, merge_relevant_dates, vasicek
from .results import MaxInTimeError, PriceResult, mean_abs, roi_mask
from .semianalytic import GreenKernel, sweep_semianalytic

BENCHMARK_DX = 5e-3


@dataclass
class Scenario:
    """Everything the engines need, assembled once per config."""

    cfg: ScenarioConfig
    model: ModelSpec
    timeline: Timeline            # relevant dates up to the sweep horizon
    timeline_full: Timeline       # extends to the bond maturity for calls
    payoff: Callable[[np.ndarray], np.ndarray]
    cert: DomainCertificate
    kernel: GreenKernel
    call_spec: CallSpec | None
    reference: Callable[[float, np.ndarray], np.ndarray] | None
    reference_error: str | None


def build_scenario(cfg: ScenarioConfig) -> Scenario:
    validate_config(cfg)
    model = vasicek(cfg.alpha, cfg.beta, cfg.sigma)
    horizon = cfg.horizon
    timeline = merge_relevant_dates(cfg.jumps, cfg.rollovers, horizon)

    call_spec = None
    if isinstance(cfg.product, CallProduct):
        call_spec = CallSpec(
            strike=cfg.product.strike,
            expiry=cfg.product.expiry,
            bond_maturity=cfg.product.bond_maturity,
        )
        timeline_full = merge_relevant_dates(cfg.jumps, cfg.rollovers, cfg.product.bond_maturity)
        coeffs_S = zcb_coefficients(model, timeline_full)
        strike = cfg.product.strike
        expiry = cfg.product.expiry

        def payoff(xs):
            return np.maximum(zcb_price(coeffs_S, expiry, np.asarray(xs, dtype=float)) - strike, 0.0)
    else:
        timeline_full = timeline

        def payoff(xs):
            return np.ones_like(np.asarray(xs, dtype=float))

    cert = localize_domain(
        model, timeline, cfg.x_min, cfg.x_max, horizon,
        tol=cfg.tol_kernel, tol_jump=cfg.tol_jump,
    )
    kernel = GreenKernel.from_model(model)

    reference = None
    reference_error = None
    try:
        if call_spec is not None:
            tl_full = timeline_full
            spec = call_spec

            def reference(t, xs):
                return call_price(model, tl_full, spec, t, np.asarray(xs, dtype=float))
        else:
            coeffs = zcb_coefficients(model, timeline)

            def reference(t, xs):
                return zcb_price(coeffs, t, np.asarray(xs, dtype=float))
        reference(0.0, np.array([cfg.x_min, cfg.x_max]))
    except ValueError as exc:
        reference = None
        reference_error = str(exc)

    return Scenario(
        cfg=cfg, model=model, timeline=timeline, timeline_full=timeline_full,
        payoff=payoff, cert=cert, kernel=kernel, call_spec=call_spec,
        reference=reference, reference_error=reference_error,
    )


def _as_config(cfg_or_path) -> ScenarioConfig:
    if isinstance(cfg_or_path, ScenarioConfig):
        return cfg_or_path
    return load_config(cfg_or_path)


def _attach_reference_errors(res: PriceResult, scen: Scenario) -> None:
    if scen.reference is None:
        return
    mask = roi_mask(res.xs, scen.cfg.x_min, scen.cfg.x_max)
    res.errors["t0_vs_closed"] = mean_abs(
        res.values[mask], scen.reference(0.0, res.xs[mask])
    )


def run_scenario(config_path, outdir: str | Path | None = None) -> dict[str, PriceResult]:
    """Price one scenario with every engine named in its config.

    Returns one PriceResult per engine.  Sweep engines carry the certified
    domain in their metadata and, when a closed form exists, error entries
    against it.  With `outdir` set, writes `prices.csv` there.
    """
    cfg = _as_config(config_path)
    scen = build_scenario(cfg)
    cert = scen.cert
    xs = lattice_grid(cert.a_lo, cert.a_hi, cfg.dx)
    results: dict[str, PriceResult] = {}

    for engine in cfg.engines:
        if engine == "closed":
            if scen.reference is None:
                raise ValueError(
                    f"no closed form for this scenario ({scen.reference_error}); "
                    "drop 'closed' from the engines"
                )
            vals = scen.reference(0.0, xs)
            res = PriceResult(method="closed", xs=xs, values=np.asarray(vals, dtype=float),
                              metadata={"horizon": cfg.horizon})
        elif engine == "fd":
            fdcfg = FdConfig(theta=cfg.theta, dx=cfg.dx, dt=cfg.dt, domain=cert)
            tracker = None
            if scen.reference is not None:
                tracker = MaxInTimeError(scen.reference, xs, cfg.x_min, cfg.x_max)
            res = sweep_fd(scen.model, scen.timeline, scen.payoff, fdcfg,
                           observer=tracker.update if tracker else None)
            if tracker is not None:
                res.errors["max_in_time_vs_closed"] = tracker.worst
                res.errors["worst_time"] = tracker.worst_t
            _attach_reference_errors(res, scen)
        elif engine == "semianalytic":
            res = sweep_semianalytic(scen.kernel, scen.timeline, scen.payoff, cert, dx=cfg.dx)
            _attach_reference_errors(res, scen)
        elif engine == "mc":
            pcfg = PathConfig(
                n_paths=cfg.mc.paths,
                n_steps_per_year=cfg.mc.steps_per_year,
                seed=cfg.mc.seed,
                antithetic=cfg.mc.antithetic,
            )
            est = mc_price(scen.model, scen.timeline, scen.payoff, 0.0, cfg.mc.x0, pcfg)
            res = PriceResult(
                method="mc",
                xs=np.array([cfg.mc.x0]),
                values=np.array([est.mean]),
                metadata={
                    "std_error": est.std_error,
                    "n_paths": est.n_paths,
                    "steps_per_year": cfg.mc.steps_per_year,
                    "seed": cfg.mc.seed,
                    "antithetic": cfg.mc.antithetic,
                    "x0": cfg.mc.x0,
                },
            )
            if scen.reference is not None:
                ref = float(np.asarray(scen.reference(0.0, np.array([cfg.mc.x0])))[0])
                res.errors["abs_vs_closed"] = abs(est.mean - ref)
                if est.std_error > 0.0:
                    res.errors["z_vs_closed"] = (est.mean - ref) / est.std_error
        else:
            raise ValueError(f"unknown engine {engine!r}")
        res.metadata["certificate"] = cert.as_metadata()
        results[engine] = res

    if outdir is not None:
        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        _write_prices_csv(out / "prices.csv", cfg, scen, results)
    return results


# --------------------------------------------------------------------------- #
#  convergence
# --------------------------------------------------------------------------- #

def convergence_study(config_path, dx_ladder, outdir: str | Path | None = None) -> dict:
    """Finite-difference error ladder over a sequence of spacings.

    With a closed form the error per rung is the maximum over computed time
    levels of the mean absolute gap on the region of interest, and a
    semi-analytic sweep at the same spacing is tabulated alongside.  Without
    one, a semi-analytic benchmark at 5e-3 is priced once and the gap is taken
    at time zero on the shared lattice nodes.  Returns the rows, the log-log
    slope over the first (up to three) rungs, and which reference was used;
    with `outdir` set, also writes `convergence.csv`.
    """
    cfg = _as_config(config_path)
    dxs = [float(d) for d in dx_ladder]
    if not dxs:
        raise ValueError("empty dx ladder")
    for d in dxs:
        if not d > 0.0:
            raise ValueError(f"dx must be positive, got {d}")
    if any(b >= a for a, b in zip(dxs, dxs[1:])):
        raise ValueError(f"dx ladder must be strictly decreasing, got {dxs}")

    scen = build_scenario(cfg)
    cert = scen.cert
    rows: list[dict] = []

    if scen.reference is not None:
        reference_kind = "closed"
        for dx in dxs:
            xs = lattice_grid(cert.a_lo, cert.a_hi, dx)
            tracker = MaxInTimeError(scen.reference, xs, cfg.x_min, cfg.x_max)
            fdcfg = FdConfig(theta=cfg.theta, dx=dx, dt=cfg.dt, domain=cert)
            fd_res = sweep_fd(scen.model, scen.timeline, scen.payoff, fdcfg,
                              observer=tracker.update)
            mask = roi_mask(xs, cfg.x_min, cfg.x_max)
            fd_t0 = mean_abs(fd_res.values[mask], scen.reference(0.0, xs[mask]))
            sa_res = sweep_semianalytic(scen.kernel, scen.timeline, scen.payoff, cert, dx=dx)
            sa_t0 = mean_abs(sa_res.values[mask], scen.reference(0.0, xs[mask]))
            rows.append({
                "dx": dx,
                "n_nodes": len(xs),
                "fd_error": tracker.worst,
                "fd_t0": fd_t0,
                "sa_t0": sa_t0,
            })
    else:
        reference_kind = "semianalytic"
        bench = sweep_semianalytic(scen.kernel, scen.timeline, scen.payoff, cert,
                                   dx=BENCHMARK_DX)
        bmask = roi_mask(bench.xs, cfg.x_min, cfg.x_max)
        bx = bench.xs[bmask]
        bv = bench.values[bmask]
        for dx in dxs:
            fdcfg = FdConfig(theta=cfg.theta, dx=dx, dt=cfg.dt, domain=cert)
            fd_res = sweep_fd(scen.model, scen.timeline, scen.payoff, fdcfg)
            idx = np.rint((bx - fd_res.xs[0]) / dx).astype(int)
            on = (idx >= 0) & (idx < len(fd_res.xs))
            on[on] &= np.abs(fd_res.xs[idx[on]] - bx[on]) < 1e-9
            if not np.any(on):
                raise ValueError(
                    f"no shared lattice nodes between dx={dx} and the "
                    f"benchmark spacing {BENCHMARK_DX}"
                )
            err = mean_abs(fd_res.values[idx[on]], bv[on])
            rows.append({
                "dx": dx,
                "n_nodes": len(fd_res.xs),
                "fd_error": err,
                "n_common": int(np.sum(on)),
            })

    slope = None
    head = rows[: min(3, len(rows))]
    if len(head) >= 2 and all(r["fd_error"] > 0.0 for r in head):
        lx = np.log([r["dx"] for r in head])
        ly = np.log([r["fd_error"] for r in head])
        slope = float(np.polyfit(lx, ly, 1)[0])

    out = {
        "reference": reference_kind,
        "rows": rows,
        "slope": slope,
        "certificate": cert,
        "config": cfg,
    }
    if outdir is not None:
        d = Path(outdir)
        d.mkdir(parents=True, exist_ok=True)
        _write_convergence_csv(d / "convergence.csv", out)
    return out


# --------------------------------------------------------------------------- #
#  CSV output
# --------------------------------------------------------------------------- #

def _g(v) -> str:
    return f"{float(v):.17g}"


def _describe_lines(cfg: ScenarioConfig, cert: DomainCertificate) -> list[str]:
    lines = [f"# model: {cfg.model_kind} alpha={_g(cfg.alpha)} beta={_g(cfg.beta)} sigma={_g(cfg.sigma)}"]
    if isinstance(cfg.product, ZcbProduct):
        lines.append(f"# product: zcb maturity={_g(cfg.product.maturity)}")
    else:
        p = cfg.product
        lines.append(
            f"# product: call strike={_g(p.strike)} expiry={_g(p.expiry)} bond={_g(p.bond_maturity)}"
        )
    if cfg.rollovers:
        lines.append("# rollovers: " + " ".join(_g(t) for t in cfg.rollovers))
    for t, dist in cfg.jumps:
        lines.append(f"# jump: {_g(t)} {dist!r}")
    lines.append(
        f"# domain: a_lo={_g(cert.a_lo)} a_hi={_g(cert.a_hi)} M={_g(cert.M)} "
        f"M_bar={_g(cert.M_bar)} eps_kernel={_g(cert.eps_kernel)} eps_jump={_g(cert.eps_jump)}"
    )
    return lines


def _write_prices_csv(path: Path, cfg: ScenarioConfig, scen: Scenario,
                      results: dict[str, PriceResult]) -> None:
    grid_engines = [e for e in ("closed", "fd", "semianalytic") if e in results]
    lines = _describe_lines(cfg, scen.cert)
    for name in grid_engines:
        for key, val in sorted(results[name].errors.items()):
            lines.append(f"# {name}_{key}: {_g(val)}")
    if "mc" in results:
        m = results["mc"]
        lines.append(
            f"# mc: x0={_g(m.metadata['x0'])} mean={_g(m.values[0])} "
            f"std_error={_g(m.metadata['std_error'])} n_paths={m.metadata['n_paths']} "
            f"seed={m.metadata['seed']}"
        )
        for key, val in sorted(m.errors.items()):
            lines.append(f"# mc_{key}: {_g(val)}")

    header = ["x"] + grid_engines
    pairs = [(a, b) for i, a in enumerate(grid_engines) for b in grid_engines[i + 1:]]
    header += [f"{b}_vs_{a}" for a, b in pairs]
    lines.append(",".join(header))

    if grid_engines:
        xs = results[grid_engines[0]].xs
        mask = roi_mask(xs, cfg.x_min, cfg.x_max)
        cols = {e: results[e].values for e in grid_engines}
        for i in np.nonzero(mask)[0]:
            row = [_g(xs[i])] + [_g(cols[e][i]) for e in grid_engines]
            row += [_g(abs(cols[b][i] - cols[a][i])) for a, b in pairs]
            lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")


def _write_convergence_csv(path: Path, study: dict) -> None:
    cfg: ScenarioConfig = study["config"]
    lines = _describe_lines(cfg, study["certificate"])
    lines.append(f"# reference: {study['reference']}")
    if study["slope"] is not None:
        lines.append(f"# slope_first_rungs: {_g(study['slope'])}")
    rows = study["rows"]
    keys = list(rows[0].keys())
    lines.append(",".join(keys))
    for r in rows:
        lines.append(",".join(_g(r[k]) if isinstance(r[k], float) else str(r[k]) for k in keys))
    path.write_text("\n".join(lines) + "\n")
