"""JSON configuration parsing with strict schema validation.

Unknown keys are rejected with a JSON-path diagnostic so typos surface
immediately instead of silently falling back to defaults.
"""
from __future__ import annotations

import json
import math

from .assembly import (DEFAULT_BOB_MASS, DEFAULT_DAMPING, DEFAULT_ESCAPEMENT,
                       DEFAULT_PLATFORM_DAMPING, DEFAULT_PLATFORM_MASS,
                       DEFAULT_REF_ANGLE, GRAVITY_DEFAULT, AssemblyConfig,
                       AssemblyError, MetronomeConfig, Mobility,
                       PlatformConfig, PRESETS)

__all__ = ["parse_config", "config_to_dict", "ConfigError"]


class ConfigError(ValueError):
    """Schema violation; message carries the JSON path."""


def _reject_unknown(obj: dict, allowed: set[str], path: str):
    for key in obj:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}: unknown key (allowed: {sorted(allowed)})")


def _number(obj, key, path, default=None, positive=False, nonneg=False):
    if key not in obj:
        if default is None:
            raise ConfigError(f"{path}.{key}: required")
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}.{key}: expected a number, got {type(v).__name__}")
    v = float(v)
    if positive and not v > 0:
        raise ConfigError(f"{path}.{key}: must be > 0, got {v}")
    if nonneg and v < 0:
        raise ConfigError(f"{path}.{key}: must be >= 0, got {v}")
    return v


def _parse_mobility(raw, path) -> Mobility:
    if raw is None:
        return Mobility("free_2d")
    if isinstance(raw, str):
        if raw == "free_1d":
            return Mobility("free_1d", 0.0)
        if raw in ("fixed", "free_2d"):
            return Mobility(raw)
        raise ConfigError(f"{path}: unknown mobility {raw!r}")
    if isinstance(raw, dict):
        _reject_unknown(raw, {"mode", "axis_deg"}, path)
        mode = raw.get("mode")
        if mode not in ("fixed", "free_1d", "free_2d"):
            raise ConfigError(f"{path}.mode: unknown mobility {mode!r}")
        axis = math.radians(_number(raw, "axis_deg", path, default=0.0))
        return Mobility(mode, axis)
    raise ConfigError(f"{path}: mobility must be a string or object")


def _parse_platform(raw, path) -> PlatformConfig:
    _reject_unknown(raw, {"mass", "damping", "mobility"}, path)
    return PlatformConfig(
        mass=_number(raw, "mass", path, default=DEFAULT_PLATFORM_MASS, positive=True),
        damping=_number(raw, "damping", path, default=DEFAULT_PLATFORM_DAMPING,
                        nonneg=True),
        mobility=_parse_mobility(raw.get("mobility"), f"{path}.mobility"),
    )


_MET_KEYS = {"id", "target_frequency_hz", "length_m", "mass", "damping",
             "escapement", "orientation_deg", "mount_xy", "running"}


def _parse_metronome(raw, path) -> MetronomeConfig:
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected an object")
    _reject_unknown(raw, _MET_KEYS, path)
    if "id" not in raw or not isinstance(raw["id"], str) or not raw["id"]:
        raise ConfigError(f"{path}.id: required non-empty string")
    has_f = "target_frequency_hz" in raw
    has_l = "length_m" in raw
    if has_f == has_l:
        raise ConfigError(
            f"{path}: exactly one of target_frequency_hz or length_m must be set")
    esc = raw.get("escapement", {})
    if not isinstance(esc, dict):
        raise ConfigError(f"{path}.escapement: expected an object")
    _reject_unknown(esc, {"eps", "theta_ref_deg"}, f"{path}.escapement")
    mount = raw.get("mount_xy", (0.0, 0.0))
    if not (isinstance(mount, (list, tuple)) and len(mount) == 2
            and all(isinstance(v, (int, float)) and not isinstance(v, bool)
                    for v in mount)):
        raise ConfigError(f"{path}.mount_xy: expected [x, y]")
    running = raw.get("running", True)
    if not isinstance(running, bool):
        raise ConfigError(f"{path}.running: expected true/false")
    return MetronomeConfig(
        id=raw["id"],
        target_frequency_hz=_number(raw, "target_frequency_hz", path, default=0.0,
                                    positive=True) if has_f else None,
        length_m=_number(raw, "length_m", path, default=0.0, positive=True)
        if has_l else None,
        mass=_number(raw, "mass", path, default=DEFAULT_BOB_MASS, positive=True),
        damping=_number(raw, "damping", path, default=DEFAULT_DAMPING, nonneg=True),
        escapement_eps=_number(esc, "eps", f"{path}.escapement",
                               default=DEFAULT_ESCAPEMENT, nonneg=True),
        theta_ref=math.radians(_number(esc, "theta_ref_deg", f"{path}.escapement",
                                       default=math.degrees(DEFAULT_REF_ANGLE),
                                       positive=True)),
        orientation=math.radians(_number(raw, "orientation_deg", path, default=0.0)),
        mount_xy=(float(mount[0]), float(mount[1])),
        running=running,
    )


_TOP_KEYS = {"gravity", "platform", "metronomes", "preset", "seed",
             "detuning_split_hz", "injector_trim_hz", "calibration_tol"}


def parse_config(text: str) -> AssemblyConfig:
    """Parse and validate a JSON assembly configuration."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("$: top level must be an object")
    _reject_unknown(raw, _TOP_KEYS, "$")

    preset = raw.get("preset")
    if preset is not None:
        if not isinstance(preset, str) or preset not in PRESETS:
            raise ConfigError(f"$.preset: unknown preset {preset!r}; "
                              f"known: {sorted(PRESETS)}")
    mets_raw = raw.get("metronomes")
    if preset is None and mets_raw is None:
        raise ConfigError("$: either preset or metronomes is required")
    mets = None
    if mets_raw is not None:
        if not isinstance(mets_raw, list) or not mets_raw:
            raise ConfigError("$.metronomes: expected a non-empty array")
        mets = tuple(_parse_metronome(m, f"$.metronomes[{i}]")
                     for i, m in enumerate(mets_raw))
        ids = [m.id for m in mets]
        if len(set(ids)) != len(ids):
            raise ConfigError(f"$.metronomes: duplicate ids {ids}")
    platform = None
    if "platform" in raw:
        if not isinstance(raw["platform"], dict):
            raise ConfigError("$.platform: expected an object")
        platform = _parse_platform(raw["platform"], "$.platform")
    seed = raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError("$.seed: expected an integer")
    trim = raw.get("injector_trim_hz")
    if trim is not None:
        trim = _number(raw, "injector_trim_hz", "$")
    try:
        return AssemblyConfig(
            preset=preset,
            seed=seed,
            gravity=_number(raw, "gravity", "$", default=GRAVITY_DEFAULT,
                            positive=True),
            platform=platform,
            metronomes=mets,
            detuning_split_hz=_number(raw, "detuning_split_hz", "$", default=0.01),
            injector_trim_hz=trim,
            calibration_tol=_number(raw, "calibration_tol", "$", default=1e-4,
                                    positive=True),
        )
    except AssemblyError as exc:
        raise ConfigError(str(exc)) from exc


def config_to_dict(cfg: AssemblyConfig) -> dict:
    out: dict = {"seed": cfg.seed, "gravity": cfg.gravity,
                 "detuning_split_hz": cfg.detuning_split_hz}
    if cfg.preset:
        out["preset"] = cfg.preset
    if cfg.injector_trim_hz is not None:
        out["injector_trim_hz"] = cfg.injector_trim_hz
    if cfg.platform is not None:
        mob = cfg.platform.mobility
        out["platform"] = {"mass": cfg.platform.mass,
                           "damping": cfg.platform.damping,
                           "mobility": {"mode": mob.mode,
                                        "axis_deg": math.degrees(mob.axis)}}
    if cfg.metronomes:
        out["metronomes"] = [
            {"id": m.id,
             **({"target_frequency_hz": m.target_frequency_hz}
                if m.target_frequency_hz is not None else
                {"length_m": m.length_m}),
             "mass": m.mass, "damping": m.damping,
             "escapement": {"eps": m.escapement_eps,
                            "theta_ref_deg": math.degrees(m.theta_ref)},
             "orientation_deg": math.degrees(m.orientation),
             "mount_xy": list(m.mount_xy), "running": m.running}
            for m in cfg.metronomes]
    return out
