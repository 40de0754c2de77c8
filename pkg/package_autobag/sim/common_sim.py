#! /usr/bin/env python3
"""
Simulator state, configuration and random streams.

This module should only ever be imported by the sim package and its callers; it holds no transition logic.
"""

import zlib
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from package_autobag.common import UP, DOWN, SIDEWAYS, E_MAX, ConfigError

# Object statuses, in transition order
STAGED = "staged"
PLACED_IN_OPENING = "placed_in_opening"
PLACED_OUTSIDE = "placed_outside"
CONTAINED = "contained_after_lift"
FALLEN_OUT = "fallen_out"
OBJECT_STATUSES = (STAGED, PLACED_IN_OPENING, PLACED_OUTSIDE, CONTAINED, FALLEN_OUT)

# Grasped layers after a pin-pull or a plain grasp
NO_LAYERS = "none"
SINGLE_LAYER = "single"
DOUBLE_LAYER = "double"

# Step event tags
EV_RECENTERED = "recentered"
EV_ROTATED = "rotated"
EV_SHAKE_UP = "shake_opening_up"
EV_SHAKE_HANDLE = "shake_on_handle"
EV_FOLDED = "folded"
EV_COMPRESS_BOTTOM = "compress_on_bottom"
EV_FLATTENED = "bottom_flattened"
EV_FLIP_UP = "flip_opening_up"
EV_DILATE_CENTERED = "dilate_centered"
EV_DILATE_ASYMMETRIC = "dilate_asymmetric"
EV_DILATE_SLIP = "dilate_slip"
EV_SINGLE_LAYER = "single_layer"
EV_DOUBLE_LAYER = "double_layer"
EV_OFF_WORKSPACE = "off_workspace"
EV_PLACED_IN = "placed_in_opening"
EV_PLACED_OUT = "placed_outside"
EV_LIFT_SLIP = "lift_slip"
EV_BOTTOM_GRASP = "bottom_grasp"
EV_FELL_OUT = "fell_out"
EV_LIFTED = "lifted"

MASK64 = (1 << 64) - 1


def stream_key(name) -> int:
    """Substream key of a branch name or index."""
    if isinstance(name, (int, np.integer)):
        return int(name) & MASK64
    return zlib.crc32(str(name).encode())


class SimRandom:
    """
    Seeded PCG64 stream with named substreams. In deterministic mode every bernoulli returns its modal outcome
    (p >= 0.5), every uniform draw its midpoint and every choice the middle element, without touching the stream.
    """
    def __init__(self, seed: int, *keys, deterministic: bool = False) -> None:
        self.keys = (int(seed) & MASK64,) + tuple(stream_key(k) for k in keys)
        self.deterministic = deterministic
        self._generator = None

    @property
    def generator(self) -> np.random.Generator:
        if self._generator is None:
            self._generator = np.random.Generator(np.random.PCG64(np.random.SeedSequence(list(self.keys))))
        return self._generator

    def child(self, *names) -> "SimRandom":
        """Independent substream; adding children never shifts the draws of siblings."""
        child = SimRandom(0, deterministic=self.deterministic)
        child.keys = self.keys + tuple(stream_key(n) for n in names)
        return child

    def bernoulli(self, p: float) -> bool:
        if self.deterministic:
            return p >= 0.5
        return bool(self.generator.random() < p)

    def uniform(self, low: float, high: float) -> float:
        if self.deterministic:
            return (low + high) / 2.0
        return float(self.generator.uniform(low, high))

    def choice(self, options: Sequence):
        if len(options) == 0:
            raise ValueError("choice from an empty sequence")
        if self.deterministic:
            return options[len(options) // 2]
        return options[int(self.generator.integers(len(options)))]

    def integers(self, high: int) -> int:
        if self.deterministic:
            return high // 2
        return int(self.generator.integers(high))


@dataclass(frozen=True)
class SimConfig:
    """
    Effect magnitudes of every primitive. None of these come from measurements; they are tunable defaults
    that reproduce the qualitative effect of each action.
    """
    # shake
    shake_s_lo: float = 0.1
    shake_s_hi: float = 0.3
    p_up_shake: float = 0.2
    handle_shake_multiplier: float = 2.0
    shake_open_lo: float = 0.0
    shake_open_hi: float = 0.1
    shake_elong_lo: float = 3.0
    shake_elong_hi: float = 8.0
    p_handle_visible_scale: float = 1.0
    shake_jitter_cm: float = 2.0
    # fold
    fold_s_lo: float = 0.15
    fold_s_hi: float = 0.3
    min_surface_fraction: float = 0.1
    # compress / flip
    p_flatten: float = 0.8
    compress_inflate: float = 0.2
    compress_elongation: float = 3.0
    p_flip_up: float = 0.75
    p_flip_up_unflat: float = 0.3
    # dilate
    dilate_delta_a: float = 0.15
    dilate_rho: float = 0.7
    dilate_radius_cm: float = 4.0
    p_slip: float = 0.05
    asymmetric_factor: float = 0.5
    dilate_drift_cm: float = 2.0
    # pin-pull and lift
    p_single_layer_plain: float = 0.6
    p_single_layer_pinpull: float = 0.9
    p_grasp_slip: float = 0.1
    p_grasp_slip_double: float = 0.4
    p_side_contain: float = 0.5
    near_handle_cm: float = 4.0
    near_rim_cm: float = 3.0
    # objects
    object_radius_cm: float = 2.5
    object_packing: float = 2.0
    place_jitter_cm: float = 1.0
    # perturbation and initial states
    p_bump_off_workspace: float = 0.02
    rotate_jitter_cm: float = 1.0
    rim_visible_lo: float = 0.8
    handle_lobe_radius_cm: float = 3.0
    deterministic: bool = False

    def __post_init__(self):
        for name in self.__dataclass_fields__:
            value = getattr(self, name)
            if name.startswith("p_") and not 0.0 <= value <= 1.0:
                raise ConfigError(f"sim.{name} must be in [0, 1], got {value}")
        for lo, hi in (("shake_s_lo", "shake_s_hi"), ("shake_open_lo", "shake_open_hi"),
                       ("shake_elong_lo", "shake_elong_hi"), ("fold_s_lo", "fold_s_hi")):
            if getattr(self, lo) > getattr(self, hi):
                raise ConfigError(f"sim.{lo} must not exceed sim.{hi}")
        if not 0.0 < self.dilate_rho < 1.0:
            raise ConfigError(f"sim.dilate_rho must be in (0, 1), got {self.dilate_rho}")
        if self.shake_elong_lo < 1.0 or self.compress_elongation < 1.0:
            raise ConfigError("sim elongations must be >= 1")
        if not 0.0 <= self.rim_visible_lo <= 1.0 or not 0.0 <= self.asymmetric_factor <= 1.0:
            raise ConfigError("sim.rim_visible_lo and sim.asymmetric_factor must be in [0, 1]")
        if self.object_radius_cm <= 0 or self.object_packing < 1.0 or self.handle_lobe_radius_cm <= 0:
            raise ConfigError("sim object radius and lobe radius must be > 0, object_packing >= 1")


@dataclass(frozen=True)
class ObjectState:
    id: int
    position: Optional[Tuple[float, float]] = None
    status: str = STAGED


@dataclass(frozen=True)
class BagState:
    position: Tuple[float, float] = (0.0, 0.0)
    yaw: float = 0.0
    surface_fraction: float = 0.7
    opening_dir: str = UP
    opening_fraction: float = 0.0
    elongation: float = E_MAX
    handles_visible: Tuple[bool, bool] = (False, False)
    bottom_flat: bool = False
    rim_visible_fraction: float = 1.0
    rim_gap_angle: float = 0.0
    grasped_layers: str = NO_LAYERS
    latent_opening: float = 0.0
    latent_elongation: float = E_MAX
    off_workspace: bool = False
    objects: Tuple[ObjectState, ...] = ()

    def as_dict(self) -> dict:
        return {
            "position": [round(self.position[0], 4), round(self.position[1], 4)],
            "yaw": round(self.yaw, 6),
            "s": round(self.surface_fraction, 6),
            "dir": self.opening_dir,
            "a": round(self.opening_fraction, 6),
            "e": round(self.elongation, 6),
            "handles": list(self.handles_visible),
            "flat": self.bottom_flat,
            "v": round(self.rim_visible_fraction, 6),
        }

    def count(self, status: str) -> int:
        return sum(1 for o in self.objects if o.status == status)


@dataclass
class StepEvents:
    """Stochastic branches that fired during one transition, in order."""
    tags: List[str] = field(default_factory=list)

    def add(self, tag: str) -> None:
        self.tags.append(tag)

    def extend(self, other: "StepEvents") -> None:
        self.tags.extend(other.tags)

    @property
    def off_workspace(self) -> bool:
        return EV_OFF_WORKSPACE in self.tags

    def __contains__(self, tag: str) -> bool:
        return tag in self.tags


def wrap_angle(angle: float) -> float:
    """Wrap into [-pi, pi)."""
    return float((angle + np.pi) % (2.0 * np.pi) - np.pi)


def normalized(state: BagState, hull_to_bag: float) -> BagState:
    """
    Clamp every fraction into range and restore the cross-field rules: only an upward opening has area,
    and the bag surface is never smaller than its own opening.
    """
    s = min(1.0, max(0.0, state.surface_fraction))
    a = min(1.0, max(0.0, state.opening_fraction)) if state.opening_dir == UP else 0.0
    s = max(s, a * hull_to_bag)
    return replace(state,
                   surface_fraction=s,
                   opening_fraction=a,
                   elongation=min(E_MAX, max(1.0, state.elongation)),
                   rim_visible_fraction=min(1.0, max(0.0, state.rim_visible_fraction)),
                   latent_opening=min(1.0, max(0.0, state.latent_opening)),
                   latent_elongation=min(E_MAX, max(1.0, state.latent_elongation)),
                   yaw=wrap_angle(state.yaw))


NOT_UP = (DOWN, SIDEWAYS)
