"""Experiment configuration: flat ``key = value`` text, lists comma-separated."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields
from typing import Optional

from .constants import NR_BASIC_TIME_UNIT
from .errors import ConfigError

_SECTION = "experiment"


@dataclass
class ExperimentConfig:
    almanac_path: Optional[str] = None  # None: bundled nominal almanac
    epoch: float = 463104.0  # GPS seconds of week
    user_llh: tuple = (22.3, 39.1, 10.0)  # deg, deg, m
    user_ecef: Optional[tuple] = None  # overrides user_llh when given
    baseline: tuple = (8.0, -5.0, 3.0)  # base position minus user position, ECEF m (~10 m)
    bs_box: float = 50.0  # m, side of the cube the 5G BSs are drawn in
    N_list: list = field(default_factory=lambda: [2, 3, 5, 7])
    L_list: list = field(default_factory=lambda: [0, 1])
    sigma_list: list = field(default_factory=lambda: [0.001, 0.002, 0.003, 0.004])  # m
    code_ratio: float = 100.0  # sigma_code / sigma_phase
    sigma_az: float = 3e-3  # rad
    sigma_el: float = 3e-3  # rad
    sigma_tau: float = 1e-9  # s
    epsilon: float = 0.6
    trials: int = 500
    seed: int = 0
    mask_deg: float = 10.0
    w2_norm: str = "gnss"
    clock_cycle: float = NR_BASIC_TIME_UNIT  # s
    ambiguity_range: int = 100
    method: str = "gn"

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.seed < 0 or self.seed >= 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        for name in ("sigma_az", "sigma_el", "sigma_tau", "code_ratio", "bs_box", "clock_cycle"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if any(s < 0 for s in self.sigma_list):
            raise ConfigError("sigma_list entries must be >= 0")
        if any(n < 0 for n in self.N_list) or any(n < 0 for n in self.L_list):
            raise ConfigError("N_list and L_list entries must be >= 0")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigError("epsilon must lie in [0, 1]")
        if self.w2_norm not in ("gnss", "self"):
            raise ConfigError("w2_norm must be 'gnss' or 'self'")
        if self.method not in ("gn", "gd"):
            raise ConfigError("method must be 'gn' or 'gd'")
        if len(self.baseline) != 3 or len(self.user_llh) != 3:
            raise ConfigError("baseline and user_llh need three components")
        if self.user_ecef is not None and len(self.user_ecef) != 3:
            raise ConfigError("user_ecef needs three components")


_KINDS = {
    "almanac_path": str, "epoch": float, "user_llh": (tuple, float), "user_ecef": (tuple, float),
    "baseline": (tuple, float), "bs_box": float, "N_list": (list, int), "L_list": (list, int),
    "sigma_list": (list, float), "code_ratio": float, "sigma_az": float, "sigma_el": float,
    "sigma_tau": float, "epsilon": float, "trials": int, "seed": int, "mask_deg": float,
    "w2_norm": str, "clock_cycle": float, "ambiguity_range": int, "method": str,
}
_ALIASES = {"almanac": "almanac_path", "t_c": "clock_cycle"}


def _convert(name, text):
    kind = _KINDS[name]
    try:
        if isinstance(kind, tuple):
            container, item = kind
            values = [item(v) for v in text.split(",") if v.strip()]
            return container(values)
        if kind is int:
            return int(text, 0)
        return kind(text)
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {text!r}") from exc


def parse_config(text: str, **overrides) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        parser.read_string(f"[{_SECTION}]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    by_lower = {n.lower(): n for n in _KINDS}
    values = {}
    for key, raw in parser[_SECTION].items():
        key = _ALIASES.get(key.lower(), key.lower())
        if key not in by_lower:
            raise ConfigError(f"unknown config key {key!r}")
        name = by_lower[key]
        values[name] = _convert(name, raw.strip())
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path, **overrides) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, **overrides)


def format_config(cfg: ExperimentConfig) -> str:
    lines = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if v is None:
            continue
        if isinstance(v, (list, tuple)):
            v = ", ".join(repr(x) for x in v)
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"
