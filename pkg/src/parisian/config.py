"""Flat ``section.key = value`` run configuration.

One setting per line, ``#`` starts a comment, blank lines are ignored::

    market.spot = 100
    market.rate = 0.05
    contract.window = 0.05
    numerics.terms = 40
    mc.seed = 7

``dump_config`` writes every effective value so the output reparses to an
identical :class:`RunConfig`.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .errors import ConfigError
from .inversion import InverterConfig
from .mc import PathConfig
from .model import MarketParams, ParisianContract, validate
from .pricing import NumericsConfig

__all__ = ["RunConfig", "parse_config", "dump_config", "load_config"]


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# key -> (parser, required)
_MARKET = {"spot": (float, True), "rate": (float, True), "dividend": (float, False),
           "volatility": (float, True)}
_CONTRACT = {"strike": (float, True), "barrier": (float, True), "window": (float, True),
             "time_to_maturity": (float, True), "elapsed_age": (float, False)}
_NUMERICS = {"method": (str, False), "terms": (int, False), "precision_target": (float, False),
             "quad_tol": (float, False), "price_rtol": (float, False),
             "negative_mass_limit": (float, False)}
_MC = {"paths": (int, False), "steps_per_unit_time": (int, False), "seed": (int, False),
       "antithetic": (_bool, False), "bridge": (_bool, False)}
_SECTIONS = {"market": _MARKET, "contract": _CONTRACT, "numerics": _NUMERICS, "mc": _MC}


@dataclass(frozen=True)
class RunConfig:
    market: MarketParams
    contract: ParisianContract
    numerics: NumericsConfig
    mc: PathConfig | None = None


def _split_line(line: str, where: str) -> tuple[str, str]:
    if "=" not in line:
        raise ConfigError(f"{where}: expected 'section.key = value', got {line!r}")
    key, value = line.split("=", 1)
    return key.strip(), value.strip()


def _collect(text: str, overrides: list[str], source: str) -> dict[str, str]:
    raw: dict[str, str] = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if line:
            key, value = _split_line(line, f"{source}:{n}")
            raw[key] = value
    for item in overrides:
        key, value = _split_line(item, "override")
        raw[key] = value
    return raw


def parse_config(text: str, overrides: list[str] = (), source: str = "<config>",
                 require_seed: bool = False) -> RunConfig:
    """Parse config text plus ``key=value`` overrides (applied last).

    Unknown keys and missing required keys raise :class:`ConfigError` naming
    the key.  ``require_seed`` demands an explicit ``mc.seed``.
    """
    raw = _collect(text, list(overrides), source)
    parsed: dict[str, dict] = {name: {} for name in _SECTIONS}
    for key, value in raw.items():
        section, _, field = key.partition(".")
        schema = _SECTIONS.get(section)
        if schema is None or field not in schema:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            parsed[section][field] = schema[field][0](value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from None
    for section in ("market", "contract"):
        for field, (_, required) in _SECTIONS[section].items():
            if required and field not in parsed[section]:
                raise ConfigError(f"missing required config key '{section}.{field}'")
    if require_seed and "seed" not in parsed["mc"]:
        raise ConfigError("missing required config key 'mc.seed' (randomized runs need an explicit seed)")

    parsed["market"].setdefault("dividend", 0.0)
    market = MarketParams(**parsed["market"])
    contract = ParisianContract(**parsed["contract"])
    validate(market, contract)
    num = parsed["numerics"]
    inv_fields = {k: num.pop(k) for k in ("method", "terms", "precision_target") if k in num}
    numerics = NumericsConfig(inverter=InverterConfig(**inv_fields), **num)
    mc = PathConfig(**parsed["mc"]) if parsed["mc"] else None
    return RunConfig(market, contract, numerics, mc)


def load_config(path: str | None, overrides: list[str] = (), require_seed: bool = False) -> RunConfig:
    text = ""
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, overrides, source=path or "<flags>", require_seed=require_seed)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return repr(value) if isinstance(value, float) else str(value)


def dump_config(run: RunConfig) -> str:
    """Every effective setting, one per line, in a form :func:`parse_config` reads back."""
    lines = []
    for name, obj in (("market", run.market), ("contract", run.contract)):
        for f in dataclasses.fields(obj):
            lines.append(f"{name}.{f.name} = {_fmt(getattr(obj, f.name))}")
    inv = run.numerics.inverter
    for key in ("method", "terms", "precision_target"):
        lines.append(f"numerics.{key} = {_fmt(getattr(inv, key))}")
    for key in ("quad_tol", "price_rtol", "negative_mass_limit"):
        lines.append(f"numerics.{key} = {_fmt(getattr(run.numerics, key))}")
    if run.mc is not None:
        for f in dataclasses.fields(run.mc):
            lines.append(f"mc.{f.name} = {_fmt(getattr(run.mc, f.name))}")
    return "\n".join(lines) + "\n"
