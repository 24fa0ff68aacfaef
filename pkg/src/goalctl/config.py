"""Experiment configuration: typed sections loaded from TOML.

A config file may name a parent with ``extends = "base.toml"`` (relative to the
file); tables are merged key by key with the child winning. Validation collects every
problem before raising, so one run reports all of them.
"""

from dataclasses import dataclass, field, fields, asdict
import hashlib
import json
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
import tomli_w

from goalctl.dpc import DpcSettings
from goalctl.errors import ConfigError
from goalctl.rl.train import RlSettings


@dataclass
class RunConfig:
    seeds: list = field(default_factory=lambda: [0])
    out_dir: str = ""


@dataclass
class EnvConfig:
    """``kind = ""`` selects the command's natural environment."""

    kind: str = ""
    path: str = ""
    params: dict = field(default_factory=dict)


@dataclass
class RewardConfig:
    variant: str = "gaussian"
    goal: list = field(default_factory=list)
    M: list = field(default_factory=list)
    R: list = field(default_factory=list)
    epsilon: float = 0.05
    dims: list = field(default_factory=list)


@dataclass
class VerifyConfig:
    gamma: float = 0.9
    n: int = 2000
    horizon: int = 200
    deterministic: bool = False


@dataclass
class FilterConfig:
    particles: int = 1000
    steps: int = 50
    psi_jitter: float = 0.0


@dataclass
class Corollary1Config:
    a: float = 1.05
    b: float = 1.0
    noise_var: float = 1.0
    gamma: float = 0.95
    lqr_q: float = 1.0
    lqr_r: float = 1.0
    n: int = 2000
    horizon: int = 200
    x0_std: float = 2.0
    half_width: float = 8.0
    n_states: int = 321
    n_actions: int = 321


SECTIONS = {
    "run": RunConfig,
    "env": EnvConfig,
    "reward": RewardConfig,
    "verify": VerifyConfig,
    "filter": FilterConfig,
    "corollary1": Corollary1Config,
    "dpc": DpcSettings,
    "rl": RlSettings,
}


@dataclass
class ExperimentConfig:
    run: RunConfig = field(default_factory=RunConfig)
    env: EnvConfig = field(default_factory=EnvConfig)
    reward: RewardConfig = field(default_factory=RewardConfig)
    verify: VerifyConfig = field(default_factory=VerifyConfig)
    filter: FilterConfig = field(default_factory=FilterConfig)
    corollary1: Corollary1Config = field(default_factory=Corollary1Config)
    dpc: DpcSettings = field(default_factory=DpcSettings)
    rl: RlSettings = field(default_factory=RlSettings)


def _coerce(name, default, value, problems):
    """Check ``value`` against the type of the field default; returns the coerced value."""
    if isinstance(default, bool):
        if not isinstance(value, bool):
            problems.append(f"{name}: expected a boolean, got {value!r}")
        return value
    if isinstance(default, int) or (default is None and isinstance(value, int)):
        if isinstance(value, bool) or not isinstance(value, int):
            problems.append(f"{name}: expected an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            problems.append(f"{name}: expected a number, got {value!r}")
            return value
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            problems.append(f"{name}: expected a string, got {value!r}")
        return value
    if isinstance(default, dict):
        if not isinstance(value, dict):
            problems.append(f"{name}: expected a table, got {value!r}")
        return value
    if isinstance(default, (list, tuple)):
        if not isinstance(value, (list, tuple)):
            problems.append(f"{name}: expected a list, got {value!r}")
            return value
        as_tuple = isinstance(default, tuple)
        value = [tuple(v) if as_tuple and isinstance(v, list) else v for v in value]
        return tuple(value) if as_tuple else list(value)
    return value


def _section(name, cls, table, problems):
    if not isinstance(table, dict):
        problems.append(f"{name}: expected a table")
        return cls()
    defaults = cls()
    known = {f.name for f in fields(cls)}
    kwargs = {}
    for key, value in table.items():
        if key not in known:
            problems.append(f"{name}.{key}: unknown key")
            continue
        kwargs[key] = _coerce(f"{name}.{key}", getattr(defaults, key), value, problems)
    return cls(**kwargs)


def _check_ranges(cfg, problems):
    seeds = cfg.run.seeds if isinstance(cfg.run.seeds, list) else []
    if isinstance(cfg.run.seeds, list) and not seeds:
        problems.append("run.seeds: at least one seed is required")
    if any(isinstance(s, bool) or not isinstance(s, int) or s < 0 for s in seeds):
        problems.append("run.seeds: seeds must be nonnegative integers")
    for name in ("verify", "corollary1", "rl"):
        gamma = getattr(cfg, name).gamma
        if isinstance(gamma, float) and not 0.0 < gamma < 1.0:
            problems.append(f"{name}.gamma: must lie strictly inside (0, 1)")
    positive = [("verify.n", cfg.verify.n), ("verify.horizon", cfg.verify.horizon),
                ("filter.particles", cfg.filter.particles), ("filter.steps", cfg.filter.steps),
                ("corollary1.n", cfg.corollary1.n), ("dpc.horizon", cfg.dpc.horizon),
                ("rl.particles", cfg.rl.particles), ("rl.length", cfg.rl.length),
                ("rl.batch", cfg.rl.batch), ("reward.epsilon", cfg.reward.epsilon)]
    for key, value in positive:
        if isinstance(value, (int, float)) and not isinstance(value, bool) and value <= 0:
            problems.append(f"{key}: must be positive")
    if isinstance(cfg.dpc.iterations, int) and cfg.dpc.iterations < 0:
        problems.append("dpc.iterations: must be nonnegative")
    if cfg.dpc.objective not in ("goal", "classical"):
        problems.append(f"dpc.objective: expected 'goal' or 'classical', got {cfg.dpc.objective!r}")
    if cfg.dpc.optimizer not in ("adam", "soap"):
        problems.append(f"dpc.optimizer: expected 'adam' or 'soap', got {cfg.dpc.optimizer!r}")
    if cfg.env.kind not in ("", "linear_gaussian", "cstr", "double_pendulum"):
        problems.append(f"env.kind: unknown environment {cfg.env.kind!r}")


def from_dict(data):
    """Build and validate an :class:`ExperimentConfig`; raises :class:`ConfigError`."""
    problems = []
    sections = {}
    for key, value in data.items():
        if key == "extends":
            continue
        if key not in SECTIONS:
            problems.append(f"{key}: unknown section")
            continue
        sections[key] = _section(key, SECTIONS[key], value, problems)
    cfg = ExperimentConfig(**sections)
    _check_ranges(cfg, problems)
    if problems:
        raise ConfigError(problems)
    return cfg


def merge_tables(base, child):
    out = dict(base)
    for key, value in child.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = merge_tables(out[key], value)
        else:
            out[key] = value
    return out


def load_dict(path, _seen=None):
    """Raw TOML with ``extends`` chains resolved."""
    path = Path(path).resolve()
    seen = set() if _seen is None else _seen
    if path in seen:
        raise ConfigError([f"extends: cycle through {path.name}"])
    seen.add(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError([f"{path}: file not found"]) from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"{path.name}: {exc}"]) from None
    parent = data.pop("extends", None)
    if parent is None:
        return data
    if not isinstance(parent, str):
        raise ConfigError(["extends: expected a file name"])
    return merge_tables(load_dict(path.parent / parent, seen), data)


def load(path):
    return from_dict(load_dict(path))


def _plain(value):
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items() if v is not None}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def to_dict(cfg):
    """Nested plain-data view (tuples become lists, ``None`` entries are dropped)."""
    return _plain(asdict(cfg))


def dumps(cfg):
    return tomli_w.dumps(to_dict(cfg))


def config_hash(cfg):
    """SHA-256 of the canonical JSON form; independent of key order in the source file."""
    data = cfg if isinstance(cfg, dict) else to_dict(cfg)
    text = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()
