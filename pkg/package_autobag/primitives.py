#! /usr/bin/env python3
"""
Action vocabulary: the eight primitives with their parameters, the default parameter table, the workspace and
action validation. Positions are workspace cm (origin at the center), angles radians, frequencies Hz.
"""

import math
from dataclasses import dataclass, fields, asdict, replace
from typing import List, Tuple

from package_autobag.common import COLLECT, EXECUTE, UnknownKind, InvalidAction, ConfigError

RECENTER = "Recenter"
ROTATE = "Rotate"
SHAKE = "Shake"
FOLD = "Fold"
COMPRESS = "Compress"
FLIP = "Flip"
DILATE = "Dilate"
PINPULL = "PinPull"
KINDS = (RECENTER, ROTATE, SHAKE, FOLD, COMPRESS, FLIP, DILATE, PINPULL)


@dataclass(frozen=True)
class Recenter:
    x: float
    y: float
    kind = RECENTER

    def grasp_points(self) -> List[Tuple[float, float]]:
        return [(self.x, self.y)]


@dataclass(frozen=True)
class Rotate:
    """Grasp, lift, rotate by (alpha, beta, gamma) about x, y, z, place."""
    x: float
    y: float
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0
    kind = ROTATE

    def grasp_points(self):
        return [(self.x, self.y)]


@dataclass(frozen=True)
class Shake:
    x: float
    y: float
    k_s: int = 3
    amplitude: float = 0.7
    f: float = 0.4
    kind = SHAKE

    def grasp_points(self):
        return [(self.x, self.y)]


@dataclass(frozen=True)
class Fold:
    x: float
    y: float
    d: float = 28.0
    kind = FOLD

    def grasp_points(self):
        return [(self.x, self.y)]


@dataclass(frozen=True)
class Compress:
    x: float
    y: float
    k_c: int = 4
    kind = COMPRESS

    def grasp_points(self):
        return [(self.x, self.y)]


@dataclass(frozen=True)
class Flip:
    x_l: float
    y_l: float
    x_r: float
    y_r: float
    alpha: float = math.pi / 4
    kind = FLIP

    def grasp_points(self):
        return [(self.x_l, self.y_l), (self.x_r, self.y_r)]


@dataclass(frozen=True)
class Dilate:
    """Both grippers enter the opening at (x_l, y_l) and (x_r, y_r), tilt by alpha and pull apart by d along theta."""
    x_l: float
    y_l: float
    x_r: float
    y_r: float
    alpha: float = math.pi / 3
    theta: float = 0.0
    d: float = 10.0
    kind = DILATE

    def grasp_points(self):
        return [(self.x_l, self.y_l), (self.x_r, self.y_r)]


@dataclass(frozen=True)
class PinPull:
    x_pin: float
    y_pin: float
    x_pull: float
    y_pull: float
    kind = PINPULL

    def grasp_points(self):
        return [(self.x_pin, self.y_pin), (self.x_pull, self.y_pull)]


ACTION_TYPES = {cls.kind: cls for cls in (Recenter, Rotate, Shake, Fold, Compress, Flip, Dilate, PinPull)}
COUNT_FIELDS = ("k_s", "k_c")


def to_dict(action) -> dict:
    """Log form: {"kind": ..., "params": {field: number}}."""
    return {"kind": action.kind, "params": asdict(action)}


def action_from_dict(record: dict):
    """
    Inverse of to_dict.
    """
    kind = record.get("kind")
    if kind not in ACTION_TYPES:
        raise UnknownKind(f"unknown primitive '{kind}'")
    cls = ACTION_TYPES[kind]
    params = dict(record.get("params", {}))
    names = {f.name for f in fields(cls)}
    extra = set(params) - names
    if extra:
        raise InvalidAction(f"{kind} has no parameters {sorted(extra)}")
    for name in COUNT_FIELDS:
        if name in params:
            params[name] = int(params[name])
    try:
        return cls(**params)
    except TypeError as e:
        raise InvalidAction(f"{kind}: {e}") from e


@dataclass(frozen=True)
class PrimitiveDefaults:
    shake_k_s: int = 3
    shake_amplitude: float = 0.7
    shake_f: float = 0.4
    fold_d: float = 28.0
    compress_k_c: int = 4
    compress_pause: float = 0.9
    compress_angle: float = math.pi / 7
    flip_angle: float = math.pi / 4
    dilate_collect_alpha: float = math.pi / 3
    dilate_collect_theta: float = 0.0
    dilate_collect_d: float = 12.0
    dilate_collect_torque_stop: float = 0.05
    dilate_exec_alpha: float = math.pi / 3
    dilate_exec_theta: float = 0.0
    dilate_exec_d: float = 10.0
    dilate_exec_center_offset: float = 0.02
    dilate_exec_torque_stop: float = 0.02
    pinpull_height: float = 15.0

    def __post_init__(self):
        if self.shake_k_s < 1 or self.compress_k_c < 1:
            raise ConfigError("primitive counts must be >= 1")
        for name in ("fold_d", "dilate_collect_d", "dilate_exec_d", "pinpull_height", "shake_f"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"primitives.{name} must be > 0")


@dataclass(frozen=True)
class Workspace:
    """
    Table area in cm, origin at its center. Pixel (i, j) has its center at
    x = (i + 0.5) / ppc - width / 2, y = (j + 0.5) / ppc - height / 2.
    """
    width: float = 70.0
    height: float = 90.0
    pixel_per_cm: float = 6.0

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0 or self.pixel_per_cm <= 0:
            raise ConfigError("workspace dimensions and pixel_per_cm must be > 0")

    @property
    def width_px(self) -> int:
        return int(round(self.width * self.pixel_per_cm))

    @property
    def height_px(self) -> int:
        return int(round(self.height * self.pixel_per_cm))

    def to_pixel(self, x: float, y: float) -> Tuple[float, float]:
        """cm to continuous pixel coordinates (pixel centers at integers)."""
        return ((x + self.width / 2.0) * self.pixel_per_cm - 0.5,
                (y + self.height / 2.0) * self.pixel_per_cm - 0.5)

    def to_cm(self, px: float, py: float) -> Tuple[float, float]:
        return ((px + 0.5) / self.pixel_per_cm - self.width / 2.0,
                (py + 0.5) / self.pixel_per_cm - self.height / 2.0)

    def contains(self, x: float, y: float) -> bool:
        return abs(x) <= self.width / 2.0 and abs(y) <= self.height / 2.0


def validate_action(action, ws: Workspace) -> List[str]:
    """
    :return: list of violations, empty when the action is valid
    """
    violations = []
    for x, y in action.grasp_points():
        if not (math.isfinite(x) and math.isfinite(y)) or not ws.contains(x, y):
            violations.append(f"grasp outside workspace at ({x:.2f}, {y:.2f}) cm")
    for name in COUNT_FIELDS:
        if hasattr(action, name) and getattr(action, name) < 1:
            violations.append(f"{name} must be >= 1")
    if hasattr(action, "d") and not action.d > 0:
        violations.append("d must be > 0")
    if isinstance(action, (Dilate, Flip, PinPull)):
        (ax, ay), (bx, by) = action.grasp_points()
        if math.hypot(ax - bx, ay - by) < 1e-9:
            violations.append("coincident grippers")
    return violations


def defaults_for(kind: str, phase: str, defaults: PrimitiveDefaults = None):
    """
    Action template of a primitive for the collect or execute phase, grasp points at the origin
    (to be filled with dataclasses.replace). Dilate pulls 12 cm in collection and 10 cm in execution.
    """
    if defaults is None:
        defaults = PrimitiveDefaults()
    if phase not in (COLLECT, EXECUTE):
        raise ValueError(f"unknown phase '{phase}'")
    if kind == RECENTER:
        return Recenter(0.0, 0.0)
    elif kind == ROTATE:
        return Rotate(0.0, 0.0)
    elif kind == SHAKE:
        return Shake(0.0, 0.0, defaults.shake_k_s, defaults.shake_amplitude, defaults.shake_f)
    elif kind == FOLD:
        return Fold(0.0, 0.0, defaults.fold_d)
    elif kind == COMPRESS:
        return Compress(0.0, 0.0, defaults.compress_k_c)
    elif kind == FLIP:
        return Flip(0.0, 0.0, 0.0, 0.0, defaults.flip_angle)
    elif kind == DILATE:
        if phase == COLLECT:
            return Dilate(0.0, 0.0, 0.0, 0.0, defaults.dilate_collect_alpha, defaults.dilate_collect_theta,
                          defaults.dilate_collect_d)
        return Dilate(0.0, 0.0, 0.0, 0.0, defaults.dilate_exec_alpha, defaults.dilate_exec_theta,
                      defaults.dilate_exec_d)
    elif kind == PINPULL:
        return PinPull(0.0, 0.0, 0.0, 0.0)
    raise UnknownKind(f"unknown primitive '{kind}'")


def at(template, *points: Tuple[float, float]):
    """Fill an action template with grasp points, in the order of grasp_points()."""
    coords = [float(c) for p in points for c in p]
    names = {1: ("x", "y"), 2: ("x_l", "y_l", "x_r", "y_r")}[len(points)]
    if isinstance(template, PinPull):
        names = ("x_pin", "y_pin", "x_pull", "y_pull")
    return replace(template, **dict(zip(names, coords)))
