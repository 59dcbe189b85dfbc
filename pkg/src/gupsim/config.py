"""Experiment configuration: nested dataclasses loaded from TOML or JSON."""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigInvalid

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

__all__ = [
    "ModelConfig",
    "PacketConfig",
    "GridConfig",
    "TimesConfig",
    "Tolerances",
    "GKGConfig",
    "CurvesConfig",
    "OutputConfig",
    "ExperimentConfig",
    "load_config",
    "config_from_dict",
    "default_config_dict",
]


@dataclass
class ModelConfig:
    # give at most one of alpha_prime and epsilon = alpha' l_p^2 k0^2;
    # neither means alpha_prime = 0
    alpha_prime: float | None = None
    epsilon: float | None = None
    l_p: float = 1.0
    c: float = 1.0
    hbar: float = 1.0


@dataclass
class PacketConfig:
    # give at most one of alpha and sigma_k (alpha = 1 / (2 sigma_k^2));
    # neither means alpha = 1
    alpha: float | None = None
    sigma_k: float | None = None
    k0: float = 1.0


@dataclass
class GridConfig:
    n: int = 0  # 0: choose automatically
    k_min: float | None = None
    k_max: float | None = None
    x0: float | None = None
    n_sigma: float = 6.0


@dataclass
class TimesConfig:
    values: list | None = None
    t_max: float | str | None = 10.0  # number, or "validated"
    n_t: int = 6


@dataclass
class Tolerances:
    width_rel: float = 1e-2
    v_g_rel: float = 5e-3
    norm_drift: float = 1e-10
    derivative_rel: float = 1e-6
    gkg_oracle_abs: float = 1e-8
    gkg_energy_drift: float = 1e-12
    gkg_fd_rel: float = 1e-2


@dataclass
class GKGConfig:
    enabled: bool = False
    m0: float = 0.0
    sign_convention: str = "derivation_consistent"
    instability_policy: str = "error"
    solver: str = "spectral"
    branch: str = "positive_frequency"
    n: int = 1024
    length: float = 200.0
    dt: float = 0.0  # 0: half the leapfrog stability bound
    times: list = field(default_factory=lambda: [0.0, 5.0, 10.0])


@dataclass
class CurvesConfig:
    k_min: float = 0.01
    k_max: float = 2.0
    n: int = 200


@dataclass
class OutputConfig:
    dir: str = "out"
    emit_fields: bool = False


@dataclass
class ExperimentConfig:
    id: str = "experiment"
    seed: int = 0
    model: ModelConfig = field(default_factory=ModelConfig)
    packet: PacketConfig = field(default_factory=PacketConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    times: TimesConfig = field(default_factory=TimesConfig)
    tolerances: Tolerances = field(default_factory=Tolerances)
    gkg: GKGConfig = field(default_factory=GKGConfig)
    curves: CurvesConfig = field(default_factory=CurvesConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_SECTIONS = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}
_SECTION_TYPES = {
    "model": ModelConfig, "packet": PacketConfig, "grid": GridConfig,
    "times": TimesConfig, "tolerances": Tolerances, "gkg": GKGConfig,
    "curves": CurvesConfig, "output": OutputConfig,
}


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _coerce(key: str, value, default):
    """Check ``value`` against the type of the field's default."""
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigInvalid(key, f"expected a boolean, got {value!r}")
        return value
    if isinstance(default, int):
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigInvalid(key, f"expected an integer, got {value!r}")
        return value
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigInvalid(key, f"expected a string, got {value!r}")
        return value
    if isinstance(default, list):
        if not isinstance(value, list) or not all(_is_number(v) for v in value):
            raise ConfigInvalid(key, f"expected a list of numbers, got {value!r}")
        return [float(v) for v in value]
    if key == "times.t_max" and value == "validated":
        return value
    if key == "times.values" and isinstance(value, list):
        return value  # checked in validate()
    if value is None and default is None:
        return None
    if not _is_number(value) or not math.isfinite(value):
        raise ConfigInvalid(key, f"expected a finite number, got {value!r}")
    return float(value)


def _build_section(name: str, cls, data) -> object:
    if not isinstance(data, dict):
        raise ConfigInvalid(name, "expected a table/object")
    defaults = cls()
    known = {f.name for f in dataclasses.fields(cls)}
    for key in data:
        if key not in known:
            raise ConfigInvalid(f"{name}.{key}", "unknown key")
    kwargs = {k: _coerce(f"{name}.{k}", v, getattr(defaults, k)) for k, v in data.items()}
    return cls(**kwargs)


def _positive(key, value):
    if value is None or not _is_number(value) or not value > 0:
        raise ConfigInvalid(key, f"must be > 0, got {value!r}")


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    m, pk, tm, gk = cfg.model, cfg.packet, cfg.times, cfg.gkg
    if m.alpha_prime is not None and m.epsilon is not None:
        raise ConfigInvalid("model.epsilon", "give at most one of alpha_prime or epsilon")
    if m.alpha_prime is None and m.epsilon is None:
        m.alpha_prime = 0.0
    for key in ("l_p", "c", "hbar"):
        _positive(f"model.{key}", getattr(m, key))
    if pk.alpha is not None and pk.sigma_k is not None:
        raise ConfigInvalid("packet.sigma_k", "give at most one of alpha or sigma_k")
    if pk.alpha is None and pk.sigma_k is None:
        pk.alpha = 1.0
    if pk.alpha is not None:
        _positive("packet.alpha", pk.alpha)
    else:
        _positive("packet.sigma_k", pk.sigma_k)
    if m.epsilon is not None and pk.k0 == 0:
        raise ConfigInvalid("model.epsilon", "epsilon needs a non-zero packet.k0")
    if cfg.grid.n < 0 or (cfg.grid.n and cfg.grid.n < 2):
        raise ConfigInvalid("grid.n", "must be 0 (auto) or >= 2")
    if (cfg.grid.k_min is None) != (cfg.grid.k_max is None):
        raise ConfigInvalid("grid.k_min", "give both k_min and k_max or neither")
    if cfg.grid.k_min is not None and (cfg.grid.n == 0 or cfg.grid.k_max <= cfg.grid.k_min):
        raise ConfigInvalid("grid.k_max", "explicit k range needs k_max > k_min and n > 0")
    _positive("grid.n_sigma", cfg.grid.n_sigma)
    if tm.values is not None:
        if not all(_is_number(v) for v in tm.values):
            raise ConfigInvalid("times.values", "expected a list of numbers")
        tm.values = [float(v) for v in tm.values]
        if any(b <= a for a, b in zip(tm.values, tm.values[1:])):
            raise ConfigInvalid("times.values", "must be strictly increasing")
    else:
        if isinstance(tm.t_max, str):
            if tm.t_max != "validated":
                raise ConfigInvalid("times.t_max", "must be a number or 'validated'")
        else:
            _positive("times.t_max", tm.t_max)
        if tm.n_t < 1:
            raise ConfigInvalid("times.n_t", "must be >= 1")
    for f in dataclasses.fields(Tolerances):
        _positive(f"tolerances.{f.name}", getattr(cfg.tolerances, f.name))
    if gk.m0 < 0:
        raise ConfigInvalid("gkg.m0", "must be >= 0")
    if gk.sign_convention not in ("derivation_consistent", "paper_literal"):
        raise ConfigInvalid("gkg.sign_convention", f"unknown convention {gk.sign_convention!r}")
    if gk.instability_policy not in ("error", "allow_flagged"):
        raise ConfigInvalid("gkg.instability_policy", f"unknown policy {gk.instability_policy!r}")
    if gk.solver not in ("spectral", "fd"):
        raise ConfigInvalid("gkg.solver", f"unknown solver {gk.solver!r}")
    if gk.branch not in ("positive_frequency", "standing"):
        raise ConfigInvalid("gkg.branch", f"unknown branch {gk.branch!r}")
    if gk.n < 5:
        raise ConfigInvalid("gkg.n", "must be >= 5")
    _positive("gkg.length", gk.length)
    if gk.dt < 0:
        raise ConfigInvalid("gkg.dt", "must be >= 0")
    if any(b <= a for a, b in zip(gk.times, gk.times[1:])) or any(t < 0 for t in gk.times):
        raise ConfigInvalid("gkg.times", "must be non-negative and strictly increasing")
    if cfg.curves.n < 2 or cfg.curves.k_max <= cfg.curves.k_min:
        raise ConfigInvalid("curves.n", "need n >= 2 and k_max > k_min")
    return cfg


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigInvalid("<root>", "expected a table/object")
    kwargs = {}
    for key, value in data.items():
        if key not in _SECTIONS:
            raise ConfigInvalid(key, "unknown key")
        if key in _SECTION_TYPES:
            kwargs[key] = _build_section(key, _SECTION_TYPES[key], value)
        elif key == "id":
            if not isinstance(value, str) or not value:
                raise ConfigInvalid("id", "expected a non-empty string")
            kwargs[key] = value
        elif key == "seed":
            if not isinstance(value, int) or isinstance(value, bool):
                raise ConfigInvalid("seed", "expected an integer")
            kwargs[key] = value
    return validate(ExperimentConfig(**kwargs))


def load_config(path) -> ExperimentConfig:
    """Read a ``.toml`` or ``.json`` experiment file (format from the extension)."""
    path = Path(path)
    suffix = path.suffix.lower()
    try:
        if suffix == ".toml":
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        elif suffix == ".json":
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        else:
            raise ConfigInvalid("<file>", f"unsupported config extension {suffix!r}")
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as exc:
        raise ConfigInvalid("<file>", f"parse error: {exc}") from exc
    return config_from_dict(data)


def default_config_dict() -> dict:
    return ExperimentConfig().to_dict()
