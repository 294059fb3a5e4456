"""Run configurations for each experiment command.

A configuration is built from a plain mapping (a parsed YAML file merged
with command-line overrides).  Keys may use hyphens or underscores;
``lambda`` is accepted for ``lam``.  Unknown keys, wrong types and out of
range values raise ``ConfigError`` naming the key.
"""

import dataclasses
from dataclasses import dataclass
from typing import Optional

import yaml

DEFAULT_S_GRID = tuple(round(0.3 * i, 10) for i in range(1, 21))
ALIASES = {"lambda": "lam"}


class ConfigError(ValueError):
    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class SampleLoopsConfig:
    modes: int
    proposals: int
    seed: int
    output: str
    lam: float = 0.0
    K: float = float("inf")
    kind: str = "real"

    command = "sample-loops"


@dataclass(frozen=True)
class EvolveNlsConfig:
    modes: int
    dt: float
    steps: int
    initial: object  # an integer loop seed or a coefficient table path
    output: str
    beta: float = 1.0
    record_every: int = 1
    trajectory: bool = False

    command = "evolve-nls"


@dataclass(frozen=True)
class SimulateFramesConfig:
    paths: int
    seed: int
    output: str
    epsilon: float = 1e-2
    h: float = 1e-3
    T: float = 10.0
    record_every: int = 100
    s_grid: tuple = DEFAULT_S_GRID
    workers: int = 1
    dump_paths: int = 0
    periodic_bridge: bool = False

    command = "simulate-frames"


@dataclass(frozen=True)
class AnalyzeConfig:
    input: str
    output: str
    bins_theta: int = 8
    bins_phi: int = 8
    hist_bins: int = 36
    level: float = 0.00045

    command = "analyze"


@dataclass(frozen=True)
class JkConfig:
    k: int
    alphas: str
    output: Optional[str] = None

    command = "jk"


COMMANDS = {
    c.command: c for c in (SampleLoopsConfig, EvolveNlsConfig, SimulateFramesConfig, AnalyzeConfig, JkConfig)
}

# keys that never affect data tables (kept out of table metadata)
SCHEDULING_KEYS = ("workers", "output")


def normalize_key(key):
    key = str(key).replace("-", "_")
    return ALIASES.get(key, key)


def _coerce(name, kind, value):
    if value is None:
        raise ConfigError(name, "value is missing")
    try:
        if kind is int:
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise TypeError
            return int(value)
        if kind is float:
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if kind is bool:
            if isinstance(value, str):
                low = value.lower()
                if low in ("1", "true", "yes", "on"):
                    return True
                if low in ("0", "false", "no", "off"):
                    return False
                raise TypeError
            return bool(value)
        if kind is tuple:
            if isinstance(value, str):
                value = [v for v in value.replace(",", " ").split()]
            return tuple(float(v) for v in value)
        if kind is str:
            return str(value)
        return value
    except (TypeError, ValueError):
        raise ConfigError(name, f"expected {kind.__name__}, got {value!r}") from None


def _field_kind(f):
    return f.type if f.type in (int, float, bool, tuple, str) else str


def _check(cfg):
    def positive(name):
        if not getattr(cfg, name) > 0:
            raise ConfigError(name, f"must be positive, got {getattr(cfg, name)}")

    def non_negative(name):
        if getattr(cfg, name) < 0:
            raise ConfigError(name, f"must be non-negative, got {getattr(cfg, name)}")

    if isinstance(cfg, SampleLoopsConfig):
        positive("modes"); non_negative("proposals"); positive("K")
        if cfg.kind not in ("real", "complex"):
            raise ConfigError("kind", f"must be 'real' or 'complex', got {cfg.kind!r}")
    elif isinstance(cfg, EvolveNlsConfig):
        positive("modes"); positive("dt"); positive("steps"); positive("record_every")
    elif isinstance(cfg, SimulateFramesConfig):
        non_negative("paths"); positive("epsilon"); positive("h"); positive("T")
        positive("record_every"); positive("workers"); non_negative("dump_paths")
        if any(not 0 <= s <= cfg.T for s in cfg.s_grid):
            raise ConfigError("s_grid", f"values must lie in [0, T={cfg.T}]")
    elif isinstance(cfg, AnalyzeConfig):
        positive("bins_theta"); positive("bins_phi"); positive("hist_bins")
        if not 0 < cfg.level < 1:
            raise ConfigError("level", f"must lie in (0, 1), got {cfg.level}")
    elif isinstance(cfg, JkConfig):
        if not 1 <= cfg.k <= 20:
            raise ConfigError("k", f"must lie in [1, 20], got {cfg.k}")


def build_config(command, values):
    """Validate ``values`` (a mapping) into the dataclass for ``command``."""
    if command not in COMMANDS:
        raise ConfigError("command", f"unknown command {command!r}")
    cls = COMMANDS[command]
    fields = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for raw_key, value in (values or {}).items():
        key = normalize_key(raw_key)
        if key not in fields:
            raise ConfigError(raw_key, f"unknown key for {command}")
        if value is None:
            continue
        if key == "initial":
            kwargs[key] = value if not isinstance(value, str) or not value.lstrip("-").isdigit() else int(value)
            continue
        kwargs[key] = _coerce(raw_key, _field_kind(fields[key]), value)
    for name, f in fields.items():
        required = f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING
        if required and name not in kwargs:
            raise ConfigError(name, "required key is missing")
    cfg = cls(**kwargs)
    _check(cfg)
    return cfg


def load_config_file(path):
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError("config", f"{path} is not valid YAML: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config", f"{path} must hold a key/value mapping")
    return data


def table_meta(cfg):
    """Config echo for table headers, without scheduling-only keys."""
    out = {"command": cfg.command}
    for k, v in dataclasses.asdict(cfg).items():
        if k in SCHEDULING_KEYS:
            continue
        out[k] = list(v) if isinstance(v, tuple) else (v if v != float("inf") else "inf")
    return out
