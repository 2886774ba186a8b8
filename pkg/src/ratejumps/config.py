"""Scenario files.

A scenario is described by a small line-oriented text format: `[section]`
headers, one `key value...` entry per line, `#` comments.  Example:

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

    [grid]
    theta 0.5
    dx 0.005
    dt 0.004
    x_min -0.5
    x_max 1.0

    [engines]
    closed
    fd
    semianalytic

    [mc]
    paths 200000
    steps_per_year 512
    seed 1
    x0 0.05
    antithetic off

A call product instead reads `kind call` with `strike`, `expiry` and `bond`
entries.  Parsing is strict: unknown keys, malformed numbers and missing
sections are reported with their line number.  Serializing a parsed config
and parsing it again yields an equal config.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

from .model import Gaussian, JumpDistribution, TwoPoint

KNOWN_ENGINES = ("closed", "fd", "semianalytic", "mc")


class ConfigError(ValueError):
    def __init__(self, message: str, line_no: int | None = None, source: str | None = None):
        self.line_no = line_no
        self.source = source or "config"
        where = self.source if line_no is None else f"{self.source}:{line_no}"
        super().__init__(f"{where}: {message}")


@dataclass(frozen=True)
class ZcbProduct:
    maturity: float


@dataclass(frozen=True)
class CallProduct:
    strike: float
    expiry: float
    bond_maturity: float


@dataclass(frozen=True)
class McSettings:
    paths: int = 50_000
    steps_per_year: int = 256
    seed: int = 1
    x0: float = 0.0
    antithetic: bool = False


@dataclass(frozen=True)
class ScenarioConfig:
    alpha: float
    beta: float
    sigma: float
    product: ZcbProduct | CallProduct
    model_kind: str = "vasicek"
    rollovers: tuple[float, ...] = ()
    jumps: tuple[tuple[float, JumpDistribution], ...] = ()
    theta: float = 0.5
    dx: float = 5e-3
    dt: float = 4e-3
    x_min: float = -0.5
    x_max: float = 1.0
    tol_kernel: float = 1e-7
    tol_jump: float = 1e-12
    engines: tuple[str, ...] = ("closed", "fd", "semianalytic")
    mc: McSettings = field(default_factory=McSettings)

    @property
    def horizon(self) -> float:
        return self.product.maturity if isinstance(self.product, ZcbProduct) else self.product.expiry


def validate_config(cfg: ScenarioConfig, source: str = "config") -> None:
    def bad(msg):
        raise ConfigError(msg, source=source)

    if cfg.model_kind != "vasicek":
        bad(f"unsupported model kind {cfg.model_kind!r} in a scenario file")
    if not cfg.sigma > 0.0:
        bad(f"sigma must be positive, got {cfg.sigma}")
    if cfg.beta == 0.0:
        bad("beta must be nonzero")
    if isinstance(cfg.product, CallProduct):
        if not (0.0 < cfg.product.expiry < cfg.product.bond_maturity):
            bad("call needs 0 < expiry < bond maturity")
        if not cfg.product.strike > 0.0:
            bad("call strike must be positive")
    else:
        if not cfg.product.maturity > 0.0:
            bad("maturity must be positive")
    if not cfg.engines:
        bad("engines list is empty")
    for e in cfg.engines:
        if e not in KNOWN_ENGINES:
            bad(f"unknown engine {e!r}; known: {', '.join(KNOWN_ENGINES)}")
    if len(set(cfg.engines)) != len(cfg.engines):
        bad("duplicate engine")
    if not cfg.x_min <= cfg.x_max:
        bad(f"need x_min <= x_max, got {cfg.x_min}, {cfg.x_max}")
    for name in ("dx", "dt"):
        if not getattr(cfg, name) > 0.0:
            bad(f"{name} must be positive")
    if not (0.0 <= cfg.theta <= 1.0):
        bad(f"theta must lie in [0, 1], got {cfg.theta}")
    prev = 0.0
    for t in cfg.rollovers:
        if t <= prev:
            bad("roll-over dates must be positive and strictly increasing")
        prev = t
    prev = 0.0
    for t, _ in cfg.jumps:
        if t <= prev:
            bad("jump dates must be positive and strictly increasing")
        prev = t


# --------------------------------------------------------------------------- #
#  parsing
# --------------------------------------------------------------------------- #

def _to_float(tok: str, ln: int, src: str) -> float:
    try:
        return float(tok)
    except ValueError:
        raise ConfigError(f"not a number: {tok!r}", ln, src) from None


def _to_int(tok: str, ln: int, src: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise ConfigError(f"not an integer: {tok!r}", ln, src) from None


def _to_bool(tok: str, ln: int, src: str) -> bool:
    if tok in ("on", "true", "yes"):
        return True
    if tok in ("off", "false", "no"):
        return False
    raise ConfigError(f"not a flag (use on/off): {tok!r}", ln, src)


def _kv_pairs(toks: list[str], ln: int, src: str) -> dict[str, str]:
    out = {}
    for tok in toks:
        if "=" not in tok:
            raise ConfigError(f"expected key=value, got {tok!r}", ln, src)
        k, v = tok.split("=", 1)
        out[k] = v
    return out


def _parse_jump(toks: list[str], ln: int, src: str) -> tuple[float, JumpDistribution]:
    if len(toks) < 2:
        raise ConfigError("jump needs a date and a distribution", ln, src)
    t = _to_float(toks[0], ln, src)
    kind = toks[1]
    kv = _kv_pairs(toks[2:], ln, src)
    if kind == "gaussian":
        if set(kv) != {"mean", "std"}:
            raise ConfigError("gaussian jump needs mean= and std=", ln, src)
        return t, Gaussian(_to_float(kv["mean"], ln, src), _to_float(kv["std"], ln, src))
    if kind == "twopoint":
        if set(kv) != {"size", "up"}:
            raise ConfigError("twopoint jump needs size= and up=", ln, src)
        return t, TwoPoint(_to_float(kv["size"], ln, src), _to_float(kv["up"], ln, src))
    raise ConfigError(f"unknown jump distribution {kind!r}", ln, src)


def parse_config(text: str, source: str = "<config>") -> ScenarioConfig:
    section = None
    model: dict = {}
    rollovers: list[float] = []
    jumps: list[tuple[float, JumpDistribution]] = []
    product: dict = {}
    grid: dict = {}
    engines: list[str] = []
    saw_engines = False
    mc: dict = {}

    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in ("model", "timeline", "product", "grid", "engines", "mc"):
                raise ConfigError(f"unknown section [{section}]", ln, source)
            if section == "engines":
                saw_engines = True
            continue
        if section is None:
            raise ConfigError(f"entry before any [section]: {line!r}", ln, source)
        toks = line.split()
        key, rest = toks[0], toks[1:]

        if section == "model":
            if key == "kind":
                model["kind"] = rest[0] if rest else ""
            elif key in ("alpha", "beta", "sigma"):
                if len(rest) != 1:
                    raise ConfigError(f"{key} takes one value", ln, source)
                model[key] = _to_float(rest[0], ln, source)
            else:
                raise ConfigError(f"unknown model key {key!r}", ln, source)
        elif section == "timeline":
            if key == "rollover":
                if len(rest) != 1:
                    raise ConfigError("rollover takes one date", ln, source)
                rollovers.append(_to_float(rest[0], ln, source))
            elif key == "jump":
                jumps.append(_parse_jump(rest, ln, source))
            else:
                raise ConfigError(f"unknown timeline key {key!r}", ln, source)
        elif section == "product":
            if key == "kind":
                product["kind"] = rest[0] if rest else ""
            elif key in ("maturity", "strike", "expiry", "bond"):
                if len(rest) != 1:
                    raise ConfigError(f"{key} takes one value", ln, source)
                product[key] = _to_float(rest[0], ln, source)
            else:
                raise ConfigError(f"unknown product key {key!r}", ln, source)
        elif section == "grid":
            if key not in ("theta", "dx", "dt", "x_min", "x_max", "tol_kernel", "tol_jump"):
                raise ConfigError(f"unknown grid key {key!r}", ln, source)
            if len(rest) != 1:
                raise ConfigError(f"{key} takes one value", ln, source)
            grid[key] = _to_float(rest[0], ln, source)
        elif section == "engines":
            if rest:
                raise ConfigError("one engine name per line", ln, source)
            engines.append(key)
        elif section == "mc":
            if key in ("paths", "steps_per_year", "seed"):
                mc[key] = _to_int(rest[0], ln, source) if len(rest) == 1 else _bad_count(key, ln, source)
            elif key == "x0":
                mc[key] = _to_float(rest[0], ln, source) if len(rest) == 1 else _bad_count(key, ln, source)
            elif key == "antithetic":
                mc[key] = _to_bool(rest[0], ln, source) if len(rest) == 1 else _bad_count(key, ln, source)
            else:
                raise ConfigError(f"unknown mc key {key!r}", ln, source)

    for k in ("kind", "alpha", "beta", "sigma"):
        if k not in model:
            raise ConfigError(f"[model] is missing {k!r}", source=source)
    pk = product.get("kind")
    if pk == "zcb":
        if "maturity" not in product:
            raise ConfigError("[product] kind zcb needs maturity", source=source)
        prod = ZcbProduct(maturity=product["maturity"])
    elif pk == "call":
        for k in ("strike", "expiry", "bond"):
            if k not in product:
                raise ConfigError(f"[product] kind call needs {k!r}", source=source)
        prod = CallProduct(strike=product["strike"], expiry=product["expiry"],
                           bond_maturity=product["bond"])
    elif pk is None:
        raise ConfigError("missing [product] section", source=source)
    else:
        raise ConfigError(f"unknown product kind {pk!r}", source=source)

    if saw_engines and not engines:
        raise ConfigError("the [engines] section names no engine", source=source)

    defaults = ScenarioConfig(alpha=0.0, beta=-1.0, sigma=1.0, product=prod)
    cfg = ScenarioConfig(
        alpha=model["alpha"],
        beta=model["beta"],
        sigma=model["sigma"],
        model_kind=model["kind"],
        product=prod,
        rollovers=tuple(rollovers),
        jumps=tuple(jumps),
        theta=grid.get("theta", defaults.theta),
        dx=grid.get("dx", defaults.dx),
        dt=grid.get("dt", defaults.dt),
        x_min=grid.get("x_min", defaults.x_min),
        x_max=grid.get("x_max", defaults.x_max),
        tol_kernel=grid.get("tol_kernel", defaults.tol_kernel),
        tol_jump=grid.get("tol_jump", defaults.tol_jump),
        engines=tuple(engines) if engines else defaults.engines,
        mc=McSettings(**mc),
    )
    validate_config(cfg, source=source)
    return cfg


def _bad_count(key, ln, src):
    raise ConfigError(f"{key} takes one value", ln, src)


def load_config(path: str | Path) -> ScenarioConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read: {exc}", source=str(p)) from None
    return parse_config(text, source=str(p))


# --------------------------------------------------------------------------- #
#  serialization
# --------------------------------------------------------------------------- #

def _fmt(x: float) -> str:
    return repr(float(x))


def serialize_config(cfg: ScenarioConfig) -> str:
    out = ["[model]", f"kind {cfg.model_kind}",
           f"alpha {_fmt(cfg.alpha)}", f"beta {_fmt(cfg.beta)}", f"sigma {_fmt(cfg.sigma)}", ""]
    if cfg.rollovers or cfg.jumps:
        out.append("[timeline]")
        for t in cfg.rollovers:
            out.append(f"rollover {_fmt(t)}")
        for t, d in cfg.jumps:
            if isinstance(d, Gaussian):
                out.append(f"jump {_fmt(t)} gaussian mean={_fmt(d.mean)} std={_fmt(d.std)}")
            else:
                out.append(f"jump {_fmt(t)} twopoint size={_fmt(d.size)} up={_fmt(d.p_up)}")
        out.append("")
    out.append("[product]")
    if isinstance(cfg.product, ZcbProduct):
        out += ["kind zcb", f"maturity {_fmt(cfg.product.maturity)}"]
    else:
        out += ["kind call", f"strike {_fmt(cfg.product.strike)}",
                f"expiry {_fmt(cfg.product.expiry)}", f"bond {_fmt(cfg.product.bond_maturity)}"]
    out += ["", "[grid]",
            f"theta {_fmt(cfg.theta)}", f"dx {_fmt(cfg.dx)}", f"dt {_fmt(cfg.dt)}",
            f"x_min {_fmt(cfg.x_min)}", f"x_max {_fmt(cfg.x_max)}",
            f"tol_kernel {_fmt(cfg.tol_kernel)}", f"tol_jump {_fmt(cfg.tol_jump)}",
            "", "[engines]"]
    out += list(cfg.engines)
    out += ["", "[mc]",
            f"paths {cfg.mc.paths}", f"steps_per_year {cfg.mc.steps_per_year}",
            f"seed {cfg.mc.seed}", f"x0 {_fmt(cfg.mc.x0)}",
            f"antithetic {'on' if cfg.mc.antithetic else 'off'}", ""]
    return "\n".join(out)


def with_overrides(cfg: ScenarioConfig, **kw) -> ScenarioConfig:
    """Functional update helper (used by the command line for flag overrides)."""
    mc_kw = {k[3:]: v for k, v in kw.items() if k.startswith("mc_")}
    rest = {k: v for k, v in kw.items() if not k.startswith("mc_")}
    if mc_kw:
        rest["mc"] = replace(cfg.mc, **mc_kw)
    return replace(cfg, **rest)
