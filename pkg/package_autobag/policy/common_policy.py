#! /usr/bin/env python3
"""
Policy thresholds, settings, per-trial policy state and the Observation every decision is made from.
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from package_autobag.common import (STAGE1, STAGE2, AUTOBAG, AB_A, AB_E, AB_P, VARIANTS, HANDLE,
                                    ConfigError)
from package_autobag import geometry, perception
from package_autobag.perception import BagCalibration, OpeningMetrics
from package_autobag.primitives import PrimitiveDefaults, Workspace
from package_autobag.segmask import SegMask


@dataclass(frozen=True)
class PolicyThresholds:
    S1: float = 0.55
    A1: float = 0.15
    E1: float = 4.5
    A2: float = 0.45
    E2: float = 2.88

    def __post_init__(self):
        if not 0.0 < self.A1 <= self.A2 <= 1.0:
            raise ConfigError(f"thresholds need 0 < A1 <= A2 <= 1, got A1={self.A1}, A2={self.A2}")
        if self.E2 > self.E1 or self.E2 < 1.0:
            raise ConfigError(f"thresholds need 1 <= E2 <= E1, got E1={self.E1}, E2={self.E2}")
        if not 0.0 < self.S1 <= 1.0:
            raise ConfigError(f"threshold S1 must be in (0, 1], got {self.S1}")

    def stage1_exit(self, metrics: OpeningMetrics, variant: str) -> bool:
        """Opening already usable: strictly above A1 and strictly below E1."""
        area_ok = metrics.a_ch > self.A1
        elongation_ok = metrics.e_ch < self.E1
        return _combine(area_ok, elongation_ok, variant)

    def stage2_exit(self, metrics: OpeningMetrics, variant: str) -> bool:
        """Opening ready for insertion: area reaches A2 and elongation is at most E2."""
        area_ok = metrics.a_ch >= self.A2
        elongation_ok = metrics.e_ch <= self.E2
        return _combine(area_ok, elongation_ok, variant)


def _combine(area_ok: bool, elongation_ok: bool, variant: str) -> bool:
    if variant == AB_A:
        return elongation_ok
    if variant == AB_E:
        return area_ok
    return area_ok and elongation_ok


@dataclass(frozen=True)
class PolicySettings:
    variant: str = AUTOBAG
    recenter_radius_cm: float = 10.0
    rotate_tolerance_deg: float = 5.0
    handle_min_px: int = 20
    collect_area_threshold: float = 0.55

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"policy.variant must be one of {', '.join(VARIANTS)}, got '{self.variant}'")
        if self.recenter_radius_cm <= 0 or not 0 <= self.rotate_tolerance_deg < 90 or self.handle_min_px < 1:
            raise ConfigError("policy.recenter_radius_cm must be > 0, rotate_tolerance_deg in [0, 90), "
                              "handle_min_px >= 1")


@dataclass(frozen=True)
class PolicyContext:
    """Everything a decision needs besides the observation."""
    thresholds: PolicyThresholds = field(default_factory=PolicyThresholds)
    settings: PolicySettings = field(default_factory=PolicySettings)
    workspace: Workspace = field(default_factory=Workspace)
    defaults: PrimitiveDefaults = field(default_factory=PrimitiveDefaults)
    budget: int = 15


@dataclass(frozen=True)
class PolicyState:
    stage: str = STAGE1
    steps_used: int = 0
    last_action_kind: Optional[str] = None
    variant: str = AUTOBAG
    initial_check_done: bool = False
    last_rim_center: Optional[Tuple[float, float]] = None
    last_rule: str = ""


@dataclass(frozen=True)
class AdvanceStage:
    stage: str
    reason: str
    kind = "AdvanceStage"


@dataclass(frozen=True)
class Observation:
    """
    Everything the policy may know about one frame; derived from the segmented mask only.
    bag_metrics is the bag-region approximation of the opening metrics.
    """
    mask: SegMask
    metrics: OpeningMetrics
    bag_fraction: float
    bag_centroid: Optional[Tuple[float, float]]
    handle_components: List[np.ndarray]
    bag_metrics: Optional[OpeningMetrics] = None

    def policy_metrics(self, variant: str) -> OpeningMetrics:
        if variant != AB_P:
            return self.metrics
        if self.bag_metrics is None:
            raise ValueError("observation was built without bag-region metrics")
        return self.bag_metrics

    def as_dict(self) -> dict:
        return {
            "digest": self.mask.digest(),
            "a_ch": round(self.metrics.a_ch, 6),
            "e_ch": round(self.metrics.e_ch, 6),
            "bag_fraction": round(self.bag_fraction, 6),
            "handles": len(self.handle_components),
        }


def observe(mask: SegMask, cal: BagCalibration, handle_min_px: int = 20, with_bag_metrics: bool = False) -> Observation:
    """
    :param with_bag_metrics: also compute the bag-region metrics (needed by the ab-p variant only)
    """
    bag = mask.foreground_pixels()
    handles = [c for c in geometry.connected_components(mask, HANDLE) if len(c) >= handle_min_px]
    return Observation(mask=mask,
                       metrics=perception.opening_metrics(mask, cal),
                       bag_fraction=perception.bag_area_fraction(mask, cal),
                       bag_centroid=geometry.centroid(bag) if len(bag) else None,
                       handle_components=handles,
                       bag_metrics=perception.bag_metrics(mask, cal) if with_bag_metrics else None)


def offset_from_center(point_px: Tuple[float, float], ws: Workspace) -> float:
    """Distance of a pixel point from the workspace center, in cm."""
    x, y = ws.to_cm(*point_px)
    return math.hypot(x, y)


OPENING_STAGES = (STAGE1, STAGE2)
