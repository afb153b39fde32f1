"""Run configuration: YAML file + flag overrides -> validated module types.

All range checks happen here, before any command does real work, so an
invalid config can never leave partial output behind. Keys mirror the CLI
flag names (omega, l, h, r0, strategy, schedule, target, ...).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import yaml

from .cutoff import (
    SCHEDULE_CONSTANT,
    SCHEDULE_LINEAR_DECAY,
    SCHEDULE_LINEAR_GROWTH,
    STRATEGY_ENERGY,
    STRATEGY_SPATIAL,
    CutoffPolicy,
    ScaleSchedule,
)
from .guidance import GuidanceConfig
from .presets import preset_values
from .tensors import ValidationError


class ConfigError(ValueError):
    """Invalid or incomplete run configuration."""


STRATEGY_NAMES = {"spatial": STRATEGY_SPATIAL, "energy": STRATEGY_ENERGY}
SCHEDULE_NAMES = {
    "constant": SCHEDULE_CONSTANT,
    "linear-decay": SCHEDULE_LINEAR_DECAY,
    "linear-growth": SCHEDULE_LINEAR_GROWTH,
}


def load_config_file(path: str | Path) -> dict[str, Any]:
    raw = Path(path).read_text(encoding="utf-8")
    try:
        data = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config file {path}: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a key/value mapping")
    return data


def merge_config(
    file_values: dict[str, Any], overrides: dict[str, Any]
) -> dict[str, Any]:
    """Preset values first, then the file, then explicit flag overrides."""
    merged: dict[str, Any] = {}
    preset = file_values.get("preset") or overrides.get("preset")
    if preset is not None:
        try:
            merged.update(preset_values(str(preset)))
        except KeyError as exc:
            raise ConfigError(str(exc)) from exc
    merged.update({k: v for k, v in file_values.items() if k != "preset"})
    merged.update({k: v for k, v in overrides.items() if v is not None and k != "preset"})
    return merged


def _as_float(merged: dict[str, Any], key: str, default: Optional[float] = None) -> Optional[float]:
    value = merged.get(key, default)
    if value is None:
        return None
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"config key {key!r} must be a number, got {value!r}") from None


def _as_int(merged: dict[str, Any], key: str, default: Optional[int] = None) -> Optional[int]:
    value = merged.get(key, default)
    if value is None:
        return None
    try:
        if isinstance(value, float) and not value.is_integer():
            raise ValueError
        return int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"config key {key!r} must be an integer, got {value!r}") from None


def build_guidance_config(merged: dict[str, Any], steps: Optional[int] = None) -> GuidanceConfig:
    """Validate guidance-related keys and produce a GuidanceConfig."""
    strategy_name = str(merged.get("strategy", "spatial"))
    if strategy_name not in STRATEGY_NAMES:
        raise ConfigError(f"strategy must be one of {sorted(STRATEGY_NAMES)}, got {strategy_name!r}")
    schedule_name = str(merged.get("schedule", "constant"))
    if schedule_name not in SCHEDULE_NAMES:
        raise ConfigError(f"schedule must be one of {sorted(SCHEDULE_NAMES)}, got {schedule_name!r}")
    target = str(merged.get("target", "delta"))
    if target not in ("delta", "epsilon"):
        raise ConfigError(f"target must be 'delta' or 'epsilon', got {target!r}")

    r0 = _as_float(merged, "r0")
    if r0 is None:
        raise ConfigError("missing required key 'r0'")
    low = _as_float(merged, "l", 1.0)
    high = _as_float(merged, "h", 1.0)

    omega = _as_float(merged, "omega")
    if target == "epsilon":
        omega = 1.0 if omega is None else omega
    elif omega is None:
        raise ConfigError("missing required key 'omega' (delta target)")

    try:
        schedule = ScaleSchedule(SCHEDULE_NAMES[schedule_name], low, high, steps)
        cutoff = CutoffPolicy(STRATEGY_NAMES[strategy_name], r0)
        return GuidanceConfig(omega, schedule, cutoff, target)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc


@dataclass(frozen=True)
class SamplerSettings:
    """Validated toy-sampler settings pulled from a merged config."""

    mixture_spec: Any
    steps: int
    beta_start: float
    beta_end: float
    substeps: int
    seed: int
    condition: Optional[str]
    effective: dict[str, Any] = field(default_factory=dict)


def build_sampler_settings(merged: dict[str, Any]) -> SamplerSettings:
    steps = _as_int(merged, "steps", 50)
    substeps = _as_int(merged, "substeps", steps)
    seed = _as_int(merged, "seed", 0)
    beta_start = _as_float(merged, "beta_start", 0.02)
    beta_end = _as_float(merged, "beta_end", 0.25)
    if steps < 2:
        raise ConfigError("'steps' must be >= 2")
    if not 1 <= substeps <= steps:
        raise ConfigError(f"'substeps' must be in [1, {steps}]")
    if not 0.0 < beta_start <= beta_end < 1.0:
        raise ConfigError("betas must satisfy 0 < beta_start <= beta_end < 1")
    mixture = merged.get("mixture", "two-band")
    condition = merged.get("condition")
    effective = {
        "mixture": mixture if isinstance(mixture, str) else "inline",
        "steps": steps,
        "substeps": substeps,
        "seed": seed,
        "beta_start": beta_start,
        "beta_end": beta_end,
    }
    return SamplerSettings(
        mixture, steps, beta_start, beta_end, substeps, seed,
        None if condition is None else str(condition), effective,
    )
