"""Command line front end.

    ratejumps price CONFIG [--outdir DIR]
    ratejumps converge CONFIG --dx DX1 DX2 DX3 ... [--outdir DIR]
    ratejumps simulate CONFIG [--paths N] [--seed S] [--steps-per-year M] [--outdir DIR]
    ratejumps localize CONFIG [--outdir DIR]

Output tables land in --outdir, else in $RATEJUMPS_OUTDIR, else in the
working directory.  Exit status is 0 on success, 1 on a configuration or
validation problem, 2 on a runtime failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, load_config, with_overrides
from .localization import localize_domain
from .mc import PathConfig, mc_price, simulate_path
from .model import merge_relevant_dates, vasicek
from .runner import _describe_lines, _g, build_scenario, convergence_study, run_scenario


def _outdir(args) -> Path:
    if getattr(args, "outdir", None):
        return Path(args.outdir)
    env = os.environ.get("RATEJUMPS_OUTDIR")
    return Path(env) if env else Path(".")


def cmd_price(args) -> int:
    cfg = load_config(args.config)
    out = _outdir(args)
    results = run_scenario(cfg, outdir=out)
    for name, res in results.items():
        if name == "mc":
            print(
                f"mc: {res.values[0]:.10g} +/- {res.metadata['std_error']:.3g} "
                f"(x0={res.metadata['x0']:g}, {res.metadata['n_paths']} paths)"
            )
        else:
            i = int(np.argmin(np.abs(res.xs)))
            print(f"{name}: v(0, {res.xs[i]:g}) = {res.values[i]:.10g}")
        for key, val in sorted(res.errors.items()):
            print(f"    {key} = {val:.3g}")
    print(f"wrote {out / 'prices.csv'}")
    return 0


def cmd_converge(args) -> int:
    cfg = load_config(args.config)
    dxs = [float(d) for d in args.dx]
    if len(dxs) < 3:
        raise ValueError(f"need at least 3 spacings for a ladder, got {len(dxs)}")
    out = _outdir(args)
    study = convergence_study(cfg, dxs, outdir=out)
    print(f"reference: {study['reference']}")
    for row in study["rows"]:
        parts = [f"dx={row['dx']:g}", f"nodes={row['n_nodes']}", f"fd_error={row['fd_error']:.4g}"]
        if "sa_t0" in row:
            parts.append(f"sa_t0={row['sa_t0']:.4g}")
        print("  " + "  ".join(parts))
    if study["slope"] is not None:
        print(f"slope over first rungs: {study['slope']:.3f}")
    print(f"wrote {out / 'convergence.csv'}")
    return 0


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    over = {}
    if args.paths is not None:
        over["mc_paths"] = args.paths
    if args.seed is not None:
        over["mc_seed"] = args.seed
    if args.steps_per_year is not None:
        over["mc_steps_per_year"] = args.steps_per_year
    if over:
        cfg = with_overrides(cfg, **over)
    out = _outdir(args)
    out.mkdir(parents=True, exist_ok=True)

    scen = build_scenario(cfg)
    pcfg = PathConfig(
        n_paths=cfg.mc.paths,
        n_steps_per_year=cfg.mc.steps_per_year,
        seed=cfg.mc.seed,
        antithetic=cfg.mc.antithetic,
    )
    est = mc_price(scen.model, scen.timeline, scen.payoff, 0.0, cfg.mc.x0, pcfg)

    lines = _describe_lines(cfg, scen.cert)
    lines.append("mean,std_error,n_paths,steps_per_year,seed,x0,antithetic")
    lines.append(",".join([
        _g(est.mean), _g(est.std_error), str(est.n_paths),
        str(cfg.mc.steps_per_year), str(cfg.mc.seed), _g(cfg.mc.x0),
        "1" if cfg.mc.antithetic else "0",
    ]))
    (out / "mc.csv").write_text("\n".join(lines) + "\n")

    rng = np.random.Generator(np.random.Philox(key=cfg.mc.seed))
    times, values, discount = simulate_path(
        scen.model, scen.timeline, cfg.mc.x0, 0.0, cfg.horizon, pcfg, rng
    )
    tlines = [f"# seed: {cfg.mc.seed}", f"# discount: {_g(discount)}", "t,x"]
    tlines += [f"{_g(t)},{_g(x)}" for t, x in zip(times, values)]
    (out / "trajectory.csv").write_text("\n".join(tlines) + "\n")

    print(f"mc estimate: {est.mean:.10g} +/- {est.std_error:.3g} ({est.n_paths} paths)")
    print(f"wrote {out / 'mc.csv'} and {out / 'trajectory.csv'}")
    return 0


def cmd_localize(args) -> int:
    cfg = load_config(args.config)
    out = _outdir(args)
    out.mkdir(parents=True, exist_ok=True)
    model = vasicek(cfg.alpha, cfg.beta, cfg.sigma)
    timeline = merge_relevant_dates(cfg.jumps, cfg.rollovers, cfg.horizon)
    cert = localize_domain(
        model, timeline, cfg.x_min, cfg.x_max, cfg.horizon,
        tol=cfg.tol_kernel, tol_jump=cfg.tol_jump,
    )
    keys = ["a_lo", "a_hi", "x_min", "x_max", "M", "M_bar",
            "eps_kernel", "eps_jump", "horizon"]
    meta = cert.as_metadata()
    lines = [",".join(keys + ["heuristic"]),
             ",".join([_g(meta[k]) for k in keys] + ["1" if cert.heuristic else "0"])]
    (out / "domain.csv").write_text("\n".join(lines) + "\n")
    print(
        f"domain [{cert.a_lo:.6g}, {cert.a_hi:.6g}] for x in "
        f"[{cfg.x_min:g}, {cfg.x_max:g}] over [0, {cfg.horizon:g}]"
    )
    print(f"  kernel margin M={cert.M:.6g}  jump margin M_bar={cert.M_bar:.6g}")
    print(f"  eps_kernel={cert.eps_kernel:.3g}  eps_jump={cert.eps_jump:.3g}")
    print(f"wrote {out / 'domain.csv'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ratejumps",
        description="Bond and bond-option pricing under short-rate models with "
                    "jumps at announced dates.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("price", help="price one scenario with every configured engine")
    q.add_argument("config", help="scenario file")
    q.add_argument("--outdir", help="directory for prices.csv")
    q.set_defaults(func=cmd_price)

    c = sub.add_parser("converge", help="finite-difference error ladder over spacings")
    c.add_argument("config", help="scenario file")
    c.add_argument("--dx", nargs="+", type=float, required=True,
                   help="at least three spacings, largest first")
    c.add_argument("--outdir", help="directory for convergence.csv")
    c.set_defaults(func=cmd_converge)

    s = sub.add_parser("simulate", help="Monte Carlo estimate plus one sample trajectory")
    s.add_argument("config", help="scenario file")
    s.add_argument("--paths", type=int, help="override the configured path count")
    s.add_argument("--seed", type=int, help="override the configured seed")
    s.add_argument("--steps-per-year", type=int, help="override the time resolution")
    s.add_argument("--outdir", help="directory for mc.csv and trajectory.csv")
    s.set_defaults(func=cmd_simulate)

    l = sub.add_parser("localize", help="compute and print the certified domain")
    l.add_argument("config", help="scenario file")
    l.add_argument("--outdir", help="directory for domain.csv")
    l.set_defaults(func=cmd_localize)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main(sys.argv[1:]))


if __name__ == "__main__":
    entry()
