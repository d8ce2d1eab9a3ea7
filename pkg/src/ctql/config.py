"""Experiment configuration and its INI-style file format.

A config file has one section per component; every key maps onto a field of
the corresponding parameter dataclass and unknown keys are rejected::

    [harness]
    mode = CTQL
    grid = fine
    seed = 7

    [environment]
    beta_max = 1.8
    x_g = 0, 0
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

from .core_rl import LearningParams
from .discretization import GRIDS, Grid
from .environment import EnvParams
from .errors import ConfigError
from .reward import RewardParams
from .tutor import TutorParams

MODES = ("QL", "CT", "CTQL")


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str = "CTQL"
    grid: str = "fine"
    n_training_trials: int = 1
    # training budget for QL in mode comparisons (--long-run uses 5000)
    ql_training_trials: int = 50
    n_eval_trials: int = 20
    trial_length_s: float = 100.0
    seed: int = 0
    n_herders: int = 1
    n_targets: int = 1
    sector_period_s: float = 10.0
    # CT mode: resume full-speed pursuit whenever the target is out of reach
    ct_pursuit_after_contact: bool = False
    # how long each selected action is held before its reward is measured
    decision_period_s: float = 1e-3
    # sampling stride (in steps) for stored positions / CSV export
    record_stride: int = 100
    dense_table: bool = False
    # per-field overrides of the named grid, e.g. {"d_step": 0.2}
    grid_overrides: dict[str, float] = field(default_factory=dict)
    env: EnvParams = field(default_factory=EnvParams)
    learning: LearningParams = field(default_factory=LearningParams)
    tutor: TutorParams = field(default_factory=TutorParams)
    reward: RewardParams = field(default_factory=RewardParams)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.grid not in GRIDS:
            raise ConfigError(f"grid must be one of {sorted(GRIDS)}, got {self.grid!r}")
        if min(self.n_training_trials, self.n_eval_trials, self.ql_training_trials) < 0:
            raise ConfigError("trial counts must be non-negative")
        if self.n_herders < 1 or self.n_targets < 1:
            raise ConfigError("need at least one herder and one target")
        if not self.trial_length_s > 0 or not self.sector_period_s > 0:
            raise ConfigError("durations must be positive")
        if self.decision_period_s < self.env.Ts * (1 - 1e-9):
            raise ConfigError("decision_period_s must be at least one integration step")
        if self.record_stride < 1:
            raise ConfigError("record_stride must be at least 1")
        if self.tutor.rho_hat_tau > self.env.rho_tau:
            raise ConfigError("rho_hat_tau must not exceed the true influence radius rho_tau")
        bad = set(self.grid_overrides) - {f.name for f in fields(Grid)}
        if bad:
            raise ConfigError(f"unknown grid override(s): {sorted(bad)}")
        try:
            self.make_grid()
        except ValueError as exc:
            raise ConfigError(f"invalid grid: {exc}") from exc

    @property
    def n_steps(self) -> int:
        return round(self.trial_length_s / self.env.Ts)

    def make_grid(self) -> Grid:
        g = GRIDS[self.grid](self.tutor.rho_hat_tau, self.env.v_h_max)
        return replace(g, **self.grid_overrides) if self.grid_overrides else g

    def with_(self, **changes: Any) -> "ExperimentConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


# section name -> (config attribute or None for top level, dataclass type)
_SECTIONS = {
    "harness": (None, None),
    "cooperation": (None, None),
    "environment": ("env", EnvParams),
    "core_rl": ("learning", LearningParams),
    "tutor": ("tutor", TutorParams),
    "reward": ("reward", RewardParams),
    "discretization": (None, Grid),
}
_HARNESS_KEYS = {
    "mode", "grid", "n_training_trials", "ql_training_trials", "n_eval_trials", "trial_length_s", "seed",
    "record_stride", "dense_table", "decision_period_s", "ct_pursuit_after_contact",
}
_COOPERATION_KEYS = {"n_herders", "n_targets", "sector_period_s"}


def _parse_value(raw: str, kind: Any) -> Any:
    raw = raw.strip()
    if kind is bool or kind == "bool":
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if kind is int or kind == "int":
        return int(raw)
    if kind is float or kind == "float":
        return float(raw)
    if kind == "Vec2":
        parts = [float(x) for x in raw.replace("(", "").replace(")", "").split(",")]
        if len(parts) != 2:
            raise ValueError(f"expected two comma-separated numbers, got {raw!r}")
        return tuple(parts)
    return raw


def _field_kinds(cls) -> dict[str, Any]:
    return {f.name: f.type for f in fields(cls)}


def load_config(path: str | Path, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Read an INI config file on top of ``base`` (built-in defaults if omitted)."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    parser.read(path)
    cfg = base or ExperimentConfig()
    top: dict[str, Any] = {}
    nested: dict[str, dict[str, Any]] = {}
    top_kinds = _field_kinds(ExperimentConfig)
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown config section [{section}]")
        attr, cls = _SECTIONS[section]
        for key, raw in parser.items(section):
            try:
                if section in ("harness", "cooperation"):
                    allowed = _HARNESS_KEYS if section == "harness" else _COOPERATION_KEYS
                    if key not in allowed:
                        raise ConfigError(f"unknown key {key!r} in [{section}]")
                    top[key] = _parse_value(raw, top_kinds[key])
                elif section == "discretization":
                    if key not in _field_kinds(Grid):
                        raise ConfigError(f"unknown key {key!r} in [{section}]")
                    top.setdefault("grid_overrides", dict(cfg.grid_overrides))[key] = float(raw)
                else:
                    kinds = _field_kinds(cls)
                    if key not in kinds:
                        raise ConfigError(f"unknown key {key!r} in [{section}]")
                    nested.setdefault(attr, {})[key] = _parse_value(raw, kinds[key])
            except ValueError as exc:
                if isinstance(exc, ConfigError):
                    raise
                raise ConfigError(f"[{section}] {key}: {exc}") from exc
    for attr, changes in nested.items():
        try:
            top[attr] = replace(getattr(cfg, attr), **changes)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    try:
        return replace(cfg, **top)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
