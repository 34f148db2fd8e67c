"""Harness configuration: one versioned tree of knobs plus override plumbing."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field

from .control import ControllerConfig, PidState
from .infractions import DetectorConfig, PenaltyTable
from .oracle import OracleConfig
from .world import VehicleParams

CONFIG_SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class HarnessConfig:
    dt: float = 0.1
    planner_cadence: int = 5            # ticks between planner queries
    attention_prefix: bool = True
    attention_prefix_variant: str = "canonical"  # or "alt"
    prompt_body_variant: str = "canonical"       # or "table"
    lookahead: float = 20.0             # m to the navigation target
    fixed_target: bool = False          # freeze the first target per episode
    reuse_last_plan_max: int = 3        # failures tolerated before full brake
    planner_deadline_ms: int = 10000
    timeout_s: float | None = None      # absolute; None derives from the route
    timeout_s_per_100m: float = 120.0
    completion_margin: float = 1.0      # m short of the route end that counts as arrival
    report_normalize_per: float = 10.0  # accident counters scaled per N routes
    seed: int = 0
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    penalties: PenaltyTable = field(default_factory=PenaltyTable)
    oracle: OracleConfig = field(default_factory=OracleConfig)

    def __post_init__(self) -> None:
        if self.planner_cadence < 1:
            raise ConfigError("planner_cadence must be >= 1")
        if self.timeout_s is not None and self.timeout_s <= 0:
            raise ConfigError("timeout_s must be > 0")
        if self.timeout_s_per_100m <= 0:
            raise ConfigError("timeout_s_per_100m must be > 0")

    def episode_timeout_s(self, route_length: float) -> float:
        if self.timeout_s is not None:
            return self.timeout_s
        return self.timeout_s_per_100m * route_length / 100.0


def config_to_dict(cfg: HarnessConfig) -> dict:
    raw = dataclasses.asdict(cfg)
    raw["penalties"] = cfg.penalties.to_dict()
    raw["schema_version"] = CONFIG_SCHEMA_VERSION
    return raw


def _build_controller(raw: dict) -> ControllerConfig:
    kwargs = dict(raw)
    for key in ("heading", "speed"):
        if key in kwargs and isinstance(kwargs[key], dict):
            kwargs[key] = PidState(**kwargs[key])
    if "aim_indices" in kwargs:
        kwargs["aim_indices"] = tuple(kwargs["aim_indices"])
    return ControllerConfig(**kwargs)


def config_from_dict(raw: dict) -> HarnessConfig:
    raw = dict(raw)
    version = raw.pop("schema_version", CONFIG_SCHEMA_VERSION)
    if version != CONFIG_SCHEMA_VERSION:
        raise ConfigError(f"config schema_version {version!r} is not "
                          f"{CONFIG_SCHEMA_VERSION}")
    try:
        if "vehicle" in raw:
            raw["vehicle"] = VehicleParams(**raw["vehicle"])
        if "controller" in raw:
            raw["controller"] = _build_controller(raw["controller"])
        if "detector" in raw:
            raw["detector"] = DetectorConfig(**raw["detector"])
        if "penalties" in raw:
            raw["penalties"] = PenaltyTable.from_dict(raw["penalties"])
        if "oracle" in raw:
            raw["oracle"] = OracleConfig(**raw["oracle"])
        return HarnessConfig(**raw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def config_fingerprint(cfg: HarnessConfig) -> str:
    canonical = json.dumps(config_to_dict(cfg), sort_keys=True,
                           separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def load_config(path: str) -> HarnessConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from exc
    return config_from_dict(raw)


def _parse_scalar(text: str):
    lowered = text.lower()
    if lowered in ("true", "on", "yes"):
        return True
    if lowered in ("false", "off", "no"):
        return False
    if lowered in ("null", "none"):
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def apply_overrides(cfg: HarnessConfig, overrides) -> HarnessConfig:
    """Apply dotted key=value overrides, rejecting keys the config doesn't declare.

    Example: apply_overrides(cfg, ["detector.t_block_s=5", "attention_prefix=off"]).
    """
    if not overrides:
        return cfg
    tree = config_to_dict(cfg)
    tree.pop("schema_version", None)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, _, value = item.partition("=")
        parts = key.strip().split(".")
        node = tree
        for part in parts[:-1]:
            if not isinstance(node, dict) or part not in node:
                raise ConfigError(f"override key {key!r}: no such config group {part!r}")
            node = node[part]
        leaf = parts[-1]
        if not isinstance(node, dict) or leaf not in node:
            raise ConfigError(f"override key {key!r}: no such config key {leaf!r}")
        node[leaf] = _parse_scalar(value.strip())
    return config_from_dict(tree)
