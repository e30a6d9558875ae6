"""Run configuration: TOML files with flat dotted keys.

Schema (every key optional, defaults shown)::

    variants = ["NMPS_X_sep^ex"]   # variant names and/or baselines APS, DIAYN
    rhos = [0.1, 0.01, 0.001, 0.0001]
    seeds = [0, 1, 2, 3, 4]
    out = "runs"                   # falls back to $NMPS_OUT, then "runs"
    finetune_enabled = true
    num_skills = 16                # DIAYN baseline only
    env.kind = "fourrooms"         # or "pointmass"
    env.layout = "classic"         # FourRooms only: classic | open
    env.horizon = 0                # 0: environment default
    env.task = "reach-goal-NE"     # reach-goal-NE | reach-goal-SW
    pretrain.<field> = ...         # any PretrainConfig field
    finetune.<field> = ...         # any FinetuneConfig field

Unknown keys and values of the wrong type are rejected with the offending key
named in the error.
"""

from __future__ import annotations

import os
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

import tomli_w

from .controller import RHO_SWEEP
from .envs import TASKS
from .pipeline import BaselineKind, FinetuneConfig, PretrainConfig
from .variants import VARIANT_NAMES, parse_variant

__all__ = ["ConfigError", "EnvConfig", "RunConfig", "dump_config", "flatten", "load_config", "parse_config"]

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"config key {key!r}: {message}")
        self.key = key


@dataclass(frozen=True)
class EnvConfig:
    kind: str = "fourrooms"
    layout: str = "classic"
    horizon: int = 0
    task: str = "reach-goal-NE"


@dataclass(frozen=True)
class RunConfig:
    variants: tuple[str, ...] = ("NMPS_X_sep^ex",)
    rhos: tuple[float, ...] = RHO_SWEEP
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    out: str = ""
    finetune_enabled: bool = True
    num_skills: int = 16
    env: EnvConfig = field(default_factory=EnvConfig)
    pretrain: PretrainConfig = field(default_factory=PretrainConfig)
    finetune: FinetuneConfig = field(default_factory=FinetuneConfig)

    @property
    def out_dir(self) -> Path:
        return Path(self.out or os.environ.get("NMPS_OUT") or "runs")


_SECTIONS = {"env": EnvConfig, "pretrain": PretrainConfig, "finetune": FinetuneConfig}
_TOP_LISTS = {"variants": str, "rhos": float, "seeds": int}


def flatten(tree: dict, prefix: str = "") -> dict[str, Any]:
    out = {}
    for k, v in tree.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(flatten(v, key + "."))
        else:
            out[key] = v
    return out


def _coerce(key: str, value, default):
    """Check ``value`` against the type of ``default`` (None defaults accept numbers)."""
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(key, f"expected true/false, got {value!r}")
        return value
    if isinstance(default, int) and not isinstance(value, bool) and isinstance(value, int):
        return value
    if isinstance(default, float) or default is None:
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return type(value)(value) if default is None else float(value)
    if isinstance(default, str) and isinstance(value, str):
        return value
    raise ConfigError(key, f"expected {type(default).__name__}, got {value!r}")


def _section(name: str, cls, items: dict[str, Any]):
    known = {f.name: f for f in fields(cls)}
    base = cls()
    kwargs = {}
    for k, v in items.items():
        if k not in known:
            raise ConfigError(f"{name}.{k}", "unknown key")
        kwargs[k] = _coerce(f"{name}.{k}", v, getattr(base, k))
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as e:
        raise ConfigError(name + "." + next(iter(kwargs), ""), str(e)) from None


def parse_config(tree: dict) -> RunConfig:
    flat = flatten(tree)
    top, sections = {}, {n: {} for n in _SECTIONS}
    for key, value in flat.items():
        head, _, rest = key.partition(".")
        if head in _SECTIONS and rest:
            if "." in rest:
                raise ConfigError(key, "unknown key")
            sections[head][rest] = value
        elif rest:
            raise ConfigError(key, "unknown key")
        else:
            top[key] = value

    kwargs = {}
    defaults = RunConfig()
    for key, value in top.items():
        if key in _TOP_LISTS:
            values = value if isinstance(value, list) else [value]
            if not values:
                raise ConfigError(key, "must not be empty")
            kind = _TOP_LISTS[key]
            kwargs[key] = tuple(_coerce(key, v, kind()) for v in values)
        elif key == "schema_version":
            if value != SCHEMA_VERSION:
                raise ConfigError(key, f"unsupported schema version {value!r}")
        elif key in ("out", "finetune_enabled", "num_skills"):
            kwargs[key] = _coerce(key, value, getattr(defaults, key))
        else:
            raise ConfigError(key, "unknown key")
    for name, cls in _SECTIONS.items():
        kwargs[name] = _section(name, cls, sections[name])
    cfg = RunConfig(**kwargs)
    _check(cfg)
    return cfg


def _check(cfg: RunConfig):
    for v in cfg.variants:
        if v not in BaselineKind.ALIASES:
            try:
                parse_variant(v)
            except ValueError:
                raise ConfigError("variants", f"unknown variant {v!r}; valid: "
                                  + ", ".join(VARIANT_NAMES + ("APS", "DIAYN"))) from None
    for r in cfg.rhos:
        if not 0.0 < r <= 1.0:
            raise ConfigError("rhos", f"target rate {r} outside (0, 1]")
    if cfg.env.kind not in ("fourrooms", "pointmass"):
        raise ConfigError("env.kind", f"unknown environment {cfg.env.kind!r}")
    if cfg.env.layout not in ("classic", "open"):
        raise ConfigError("env.layout", f"unknown layout {cfg.env.layout!r}")
    if cfg.env.task not in TASKS:
        raise ConfigError("env.task", f"unknown task {cfg.env.task!r}")
    if cfg.env.horizon < 0:
        raise ConfigError("env.horizon", "must be >= 0")
    if cfg.num_skills < 2:
        raise ConfigError("num_skills", "must be >= 2")


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    with path.open("rb") as f:
        try:
            tree = tomllib.load(f)
        except tomllib.TOMLDecodeError as e:
            raise ConfigError("<file>", f"{path}: {e}") from None
    return parse_config(tree)


def _toml_value(v):
    if isinstance(v, tuple):
        return list(v)
    return v


def dump_config(cfg: RunConfig) -> str:
    """Fully resolved config as TOML; ``None`` fields are omitted (they mean 'default')."""
    doc = {"schema_version": SCHEMA_VERSION}
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if f.name in _SECTIONS:
            doc[f.name] = {k: _toml_value(v) for k, v in asdict(value).items() if v is not None}
        else:
            doc[f.name] = _toml_value(value)
    return tomli_w.dumps(doc)


def load_echo(text: str) -> RunConfig:
    return parse_config(tomllib.loads(text))


def with_overrides(cfg: RunConfig, **over) -> RunConfig:
    return replace(cfg, **{k: v for k, v in over.items() if v is not None})
