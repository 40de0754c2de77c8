#! /usr/bin/env python3
"""
Top-down geometry of a bag state in workspace cm: body outline, rim ellipse, handle lobes and the grasp regions
the transitions and the lift test are keyed on.
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from package_autobag.common import UP, BAG_WIDTH_CM, BAG_LENGTH_CM
from package_autobag.perception import BagCalibration, SUPERELLIPSE_N
from package_autobag.primitives import Workspace
from package_autobag.sim.common_sim import BagState, SimConfig

# Grasp regions
REGION_HANDLE = "handle"
REGION_RIM = "rim"
REGION_BOTTOM = "bottom"
REGION_BODY = "body"
REGION_OFF = "off"

# Lying bag: the third of the body farthest from the opening end
BOTTOM_FRACTION = 1.0 / 3.0
# Gap between the rim's outer edge and an upright handle lobe
HANDLE_CLEARANCE_CM = 0.5


@dataclass(frozen=True)
class Scene:
    """Camera scale and bag calibration shared by the transitions and the rasterizer."""
    workspace: Workspace
    calibration: BagCalibration

    @classmethod
    def default(cls, workspace: Workspace = None) -> "Scene":
        workspace = workspace if workspace is not None else Workspace()
        return cls(workspace, BagCalibration.for_scale(workspace.pixel_per_cm))

    @property
    def max_hull_cm2(self) -> float:
        return self.calibration.max_hull_area / self.workspace.pixel_per_cm ** 2

    @property
    def hull_to_bag(self) -> float:
        return self.calibration.max_hull_area / self.calibration.max_bag_area


class BagShape:
    """
    :param state: BagState
    :param scene: Scene
    :param lobe_radius: handle lobe radius in cm
    """
    def __init__(self, state: BagState, scene: Scene, lobe_radius: float = 3.0) -> None:
        self.state = state
        self.center = state.position
        self.yaw = state.yaw
        scale = math.sqrt(max(state.surface_fraction, 1e-6))
        self.semi_length = BAG_LENGTH_CM / 2.0 * scale
        self.semi_width = BAG_WIDTH_CM / 2.0 * scale
        self.lobe_radius = lobe_radius
        self.upright = state.opening_dir == UP
        area = state.opening_fraction * scene.max_hull_cm2 if self.upright else 0.0
        e = state.elongation
        self.opening_area = area
        self.rim_major = math.sqrt(area * e / math.pi)
        self.rim_minor = math.sqrt(area / (math.pi * e))

    def to_frame(self, x, y):
        """Workspace cm to bag frame (u along yaw, v across)."""
        dx = np.asarray(x, dtype=float) - self.center[0]
        dy = np.asarray(y, dtype=float) - self.center[1]
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        return dx * c + dy * s, -dx * s + dy * c

    def from_frame(self, u: float, v: float) -> Tuple[float, float]:
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        return self.center[0] + u * c - v * s, self.center[1] + u * s + v * c

    def in_body(self, x, y):
        u, v = self.to_frame(x, y)
        n = SUPERELLIPSE_N
        return np.abs(u / self.semi_length) ** n + np.abs(v / self.semi_width) ** n <= 1.0

    def extent(self) -> Tuple[float, float]:
        """Half extents of a box bounding the body, in workspace axes."""
        c, s = abs(math.cos(self.yaw)), abs(math.sin(self.yaw))
        return self.semi_length * c + self.semi_width * s, self.semi_length * s + self.semi_width * c

    def handle_centers(self) -> List[Optional[Tuple[float, float]]]:
        """Centers of the two lobes, None where the handle is hidden."""
        if self.upright:
            offset = self.rim_major + self.lobe_radius + HANDLE_CLEARANCE_CM
            frames = [(-offset, 0.0), (offset, 0.0)]
        else:
            frames = [(0.95 * self.semi_length, -0.45 * self.semi_width),
                      (0.95 * self.semi_length, 0.45 * self.semi_width)]
        return [self.from_frame(u, v) if visible else None
                for (u, v), visible in zip(frames, self.state.handles_visible)]

    def rim_level(self, x, y):
        """Normalized ellipse radius of a point in the rim frame, 1 on the rim; inf when there is no opening."""
        if self.rim_minor <= 0:
            return np.full(np.shape(x), np.inf)
        u, v = self.to_frame(x, y)
        return np.sqrt((u / self.rim_major) ** 2 + (v / self.rim_minor) ** 2)

    def rim_distance(self, x: float, y: float) -> float:
        """Approximate distance from a point to the rim ellipse in cm."""
        if self.rim_minor <= 0:
            return math.inf
        u, v = self.to_frame(x, y)
        angle = math.atan2(v / self.rim_minor, u / self.rim_major)
        ts = angle + np.linspace(-math.pi, math.pi, 721)
        return float(np.min(np.hypot(self.rim_major * np.cos(ts) - u, self.rim_minor * np.sin(ts) - v)))

    def in_opening(self, x: float, y: float, shrink: float = 0.0) -> bool:
        """Inside the opening ellipse shrunk by `shrink` cm on both semi-axes."""
        p, q = self.rim_major - shrink, self.rim_minor - shrink
        if p <= 0 or q <= 0:
            return False
        u, v = self.to_frame(x, y)
        return float((u / p) ** 2 + (v / q) ** 2) <= 1.0

    def near_handle(self, x: float, y: float, radius: float) -> bool:
        return any(c is not None and math.hypot(x - c[0], y - c[1]) <= radius for c in self.handle_centers())

    def is_bottom(self, x: float, y: float) -> bool:
        """
        Lying bag: the end third away from the opening. Upright bag: any body point outside the opening.
        """
        if not bool(self.in_body(x, y)):
            return False
        if self.upright:
            return not (self.rim_minor > 0 and float(self.rim_level(x, y)) <= 1.0)
        u, _ = self.to_frame(x, y)
        return float(u) / self.semi_length <= -BOTTOM_FRACTION

    def grasp_region(self, x: float, y: float, cfg: SimConfig) -> str:
        """
        Region a lift grasp lands in: handle, then rim, then bottom (lying or upright), then the rest of the body.
        """
        if self.near_handle(x, y, cfg.near_handle_cm):
            return REGION_HANDLE
        if self.upright and self.rim_distance(x, y) <= cfg.near_rim_cm:
            return REGION_RIM
        if self.is_bottom(x, y):
            return REGION_BOTTOM
        if not bool(self.in_body(x, y)):
            return REGION_OFF
        return REGION_BODY

    def on_handle_lobe(self, x: float, y: float) -> bool:
        return self.near_handle(x, y, self.lobe_radius)
