#! /usr/bin/env python3
"""
Run configuration: `section.key = value` lines, `#` comments, UTF-8.

Sections map onto the parameter dataclasses of each module; values are coerced to the field's type.
Any unknown section or key, duplicate key, malformed line or invalid value raises ConfigError with file:line.
The default file is taken from AUTOBAG_CONFIG when no path is given.
"""

import os
import logging
import typing
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Dict, Optional, Tuple

from package_autobag.common import ConfigError, AutobagError
from package_autobag.perception import BagCalibration, ColorRange, LabelRanges
from package_autobag.primitives import PrimitiveDefaults, Workspace
from package_autobag.segmenters import SegmenterConfig
from package_autobag.sim.common_sim import SimConfig
from package_autobag.sim.sim_shape import Scene
from package_autobag.policy.common_policy import PolicyContext, PolicySettings, PolicyThresholds

log = logging.getLogger(__name__)

TRUE_WORDS = ("true", "yes", "on", "1")
FALSE_WORDS = ("false", "no", "off", "0")


@dataclass(frozen=True)
class RunSettings:
    tier: int = 1
    trials: int = 6
    seed: int = 0
    n_objects: int = 2
    max_steps: int = 15
    workers: int = 1

    def __post_init__(self):
        if self.tier not in (1, 2, 3):
            raise ConfigError(f"run.tier must be 1, 2 or 3, got {self.tier}")
        if self.trials < 1 or self.n_objects < 1 or self.max_steps < 0 or self.workers < 1:
            raise ConfigError("run.trials, run.n_objects and run.workers must be >= 1, run.max_steps >= 0")


@dataclass(frozen=True)
class CalibrationSettings:
    """Explicit calibration in px^2; when both are 0 it is derived from the workspace scale."""
    max_hull_area: float = 0.0
    max_bag_area: float = 0.0

    def __post_init__(self):
        if (self.max_hull_area > 0) != (self.max_bag_area > 0):
            raise ConfigError("calibration.max_hull_area and calibration.max_bag_area must be given together")
        if self.max_hull_area < 0 or self.max_bag_area < 0:
            raise ConfigError("calibration areas must be >= 0")


@dataclass(frozen=True)
class RangeSettings:
    handle_low: Tuple[int, int, int] = (64, 128, 128)
    handle_high: Tuple[int, int, int] = (106, 255, 255)
    rim_low: Tuple[int, int, int] = (234, 128, 128)
    rim_high: Tuple[int, int, int] = (21, 255, 255)
    bag_low: Tuple[int, int, int] = (0, 0, 150)
    bag_high: Tuple[int, int, int] = (255, 70, 255)

    def __post_init__(self):
        self.label_ranges()

    def label_ranges(self) -> LabelRanges:
        return LabelRanges(handle=ColorRange(tuple(self.handle_low), tuple(self.handle_high)),
                           rim=ColorRange(tuple(self.rim_low), tuple(self.rim_high)),
                           bag=ColorRange(tuple(self.bag_low), tuple(self.bag_high)))


@dataclass(frozen=True)
class RunConfig:
    sim: SimConfig = field(default_factory=SimConfig)
    thresholds: PolicyThresholds = field(default_factory=PolicyThresholds)
    policy: PolicySettings = field(default_factory=PolicySettings)
    primitives: PrimitiveDefaults = field(default_factory=PrimitiveDefaults)
    calibration: CalibrationSettings = field(default_factory=CalibrationSettings)
    workspace: Workspace = field(default_factory=Workspace)
    segmenter: SegmenterConfig = field(default_factory=SegmenterConfig)
    ranges: RangeSettings = field(default_factory=RangeSettings)
    run: RunSettings = field(default_factory=RunSettings)

    def bag_calibration(self) -> BagCalibration:
        if self.calibration.max_hull_area > 0:
            return BagCalibration(self.calibration.max_hull_area, self.calibration.max_bag_area)
        return BagCalibration.for_scale(self.workspace.pixel_per_cm)

    def scene(self) -> Scene:
        return Scene(self.workspace, self.bag_calibration())

    def policy_context(self, variant: str = None) -> PolicyContext:
        settings = self.policy if variant is None else replace(self.policy, variant=variant)
        return PolicyContext(thresholds=self.thresholds, settings=settings, workspace=self.workspace,
                             defaults=self.primitives, budget=self.run.max_steps)


# section name -> RunConfig attributes whose dataclasses share the section's keys
SECTIONS: Dict[str, Tuple[str, ...]] = {
    "sim": ("sim",),
    "policy": ("thresholds", "policy"),
    "primitives": ("primitives",),
    "calibration": ("calibration",),
    "workspace": ("workspace",),
    "segmenter": ("segmenter",),
    "ranges": ("ranges",),
    "run": ("run",),
}


def _coerce(raw: str, hint):
    if hint is bool:
        word = raw.lower()
        if word in TRUE_WORDS:
            return True
        if word in FALSE_WORDS:
            return False
        raise ValueError(f"expected a boolean, got '{raw}'")
    if hint is int:
        return int(raw, 0)
    if hint is float:
        return float(raw)
    if hint is str:
        return raw
    if typing.get_origin(hint) is tuple:
        return tuple(int(part.strip(), 0) for part in raw.split(","))
    raise ValueError(f"unsupported field type {hint}")


def _field_index(attrs: Tuple[str, ...]) -> Dict[str, Tuple[str, str, object]]:
    """lower-case key -> (RunConfig attribute, field name, type hint)"""
    index = {}
    defaults = RunConfig()
    for attr in attrs:
        cls = type(getattr(defaults, attr))
        hints = typing.get_type_hints(cls)
        for f in fields(cls):
            index[f.name.lower()] = (attr, f.name, hints[f.name])
    return index


def parse_config(text: str, path: str = "<config>", base: RunConfig = None) -> RunConfig:
    """
    Parse configuration text on top of base (defaults when None).
    """
    entries: Dict[str, Dict[str, Tuple[str, int]]] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'section.key = value', got '{line}'", path, lineno)
        name, value = (part.strip() for part in line.split("=", 1))
        if "." not in name:
            raise ConfigError(f"key '{name}' has no section (use section.key)", path, lineno)
        section, key = name.split(".", 1)
        if section not in SECTIONS:
            raise ConfigError(f"unknown section '{section}'", path, lineno)
        keys = entries.setdefault(section, {})
        if key.lower() in keys:
            raise ConfigError(f"duplicate key '{name}' (first set on line {keys[key.lower()][1]})", path, lineno)
        if value == "":
            raise ConfigError(f"missing value for '{name}'", path, lineno)
        keys[key.lower()] = (value, lineno)

    cfg = base if base is not None else RunConfig()
    for section, keys in entries.items():
        index = _field_index(SECTIONS[section])
        updates: Dict[str, dict] = {}
        for key, (value, lineno) in keys.items():
            if key not in index:
                raise ConfigError(f"unknown key '{section}.{key}'", path, lineno)
            attr, name, hint = index[key]
            try:
                updates.setdefault(attr, {})[name] = _coerce(value, hint)
            except ValueError as e:
                raise ConfigError(f"bad value for '{section}.{key}': {e}", path, lineno) from e
        last_line = max(lineno for _, lineno in keys.values())
        for attr, kwargs in updates.items():
            try:
                cfg = replace(cfg, **{attr: replace(getattr(cfg, attr), **kwargs)})
            except (AutobagError, ValueError, TypeError) as e:
                raise ConfigError(str(e), path, last_line) from e
    return cfg


def load_config(path=None) -> RunConfig:
    """
    Read a config file. Without a path, AUTOBAG_CONFIG is used; without either, the defaults.
    """
    if path is None:
        path = os.environ.get("AUTOBAG_CONFIG")
    if not path:
        return RunConfig()
    text = Path(path).read_text(encoding="utf-8")
    cfg = parse_config(text, str(path))
    log.info(f"loaded configuration from {path}")
    return cfg


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    return repr(value) if isinstance(value, float) else str(value)


def dump_config(cfg: RunConfig) -> str:
    """Every key of every section, parseable by parse_config."""
    lines = []
    for section, attrs in SECTIONS.items():
        for attr in attrs:
            obj = getattr(cfg, attr)
            for f in fields(obj):
                lines.append(f"{section}.{f.name} = {_format(getattr(obj, f.name))}")
    return "\n".join(lines) + "\n"
