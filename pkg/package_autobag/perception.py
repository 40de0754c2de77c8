#! /usr/bin/env python3
"""
Turn images and masks into the quantities the policy consumes: UV-pair labels, bag-area fraction and the two
opening metrics (normalized rim hull area and rim hull elongation).
"""

import math
import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from PIL import Image

from package_autobag.common import (BACKGROUND, BAG, RIM, HANDLE, E_MAX, BAG_WIDTH_CM, BAG_LENGTH_CM,
                                    DimensionMismatch, ConfigError)
from package_autobag import geometry
from package_autobag.geometry import Polygon, AxisFrame
from package_autobag.segmask import SegMask

log = logging.getLogger(__name__)

# Body outline exponent, shared with the simulator rasterizer
SUPERELLIPSE_N = 4.0


def superellipse_area(semi_a: float, semi_b: float, n: float = SUPERELLIPSE_N) -> float:
    """Area of |x/a|^n + |y/b|^n <= 1."""
    return 4.0 * semi_a * semi_b * math.gamma(1.0 + 1.0 / n) ** 2 / math.gamma(1.0 + 2.0 / n)


@dataclass(frozen=True)
class BagCalibration:
    """
    Per-bag normalizers, in px^2.
    :param max_hull_area: largest rim hull seen offline (fully opened, round rim)
    :param max_bag_area: top-down area of the flat bag
    """
    max_hull_area: float
    max_bag_area: float

    def __post_init__(self):
        if not (self.max_hull_area > 0 and self.max_bag_area > 0):
            raise ConfigError(f"calibration areas must be > 0, got {self.max_hull_area}, {self.max_bag_area}")
        if self.max_hull_area > self.max_bag_area:
            raise ConfigError("calibration.max_hull_area must not exceed calibration.max_bag_area")

    @classmethod
    def for_scale(cls, pixel_per_cm: float, bag_width_cm: float = BAG_WIDTH_CM,
                  bag_length_cm: float = BAG_LENGTH_CM) -> "BagCalibration":
        """
        Calibration of the standard flat bag at a given camera scale. The flat bag is the rasterizer's
        superellipse; the largest rim hull is the circle whose circumference is the rim length (twice the width).
        """
        ppc2 = pixel_per_cm * pixel_per_cm
        bag_cm2 = superellipse_area(bag_length_cm / 2.0, bag_width_cm / 2.0)
        rim_length = 2.0 * bag_width_cm
        hull_cm2 = rim_length * rim_length / (4.0 * math.pi)
        return cls(max_hull_area=hull_cm2 * ppc2, max_bag_area=bag_cm2 * ppc2)


@dataclass(frozen=True)
class ColorRange:
    """
    Channel-wise bounds in 8-bit HSV (Pillow's HSV mode: every channel 0..255).
    A hue range with low > high wraps around 0, which is how red is expressed.
    """
    low: Tuple[int, int, int]
    high: Tuple[int, int, int]

    def __post_init__(self):
        if len(self.low) != 3 or len(self.high) != 3:
            raise ConfigError("color ranges need three channels")
        for value in tuple(self.low) + tuple(self.high):
            if not 0 <= value <= 255:
                raise ConfigError(f"color range value {value} outside 0..255")
        if self.low[1] > self.high[1] or self.low[2] > self.high[2]:
            raise ConfigError(f"saturation/value bounds inverted: {self.low} > {self.high}")

    @property
    def wraps(self) -> bool:
        return self.low[0] > self.high[0]

    def matches(self, hsv: np.ndarray) -> np.ndarray:
        """
        :param hsv: (H, W, 3) uint8 HSV image
        :return: (H, W) bool
        """
        h, s, v = hsv[..., 0], hsv[..., 1], hsv[..., 2]
        if self.wraps:
            hue_ok = (h >= self.low[0]) | (h <= self.high[0])
        else:
            hue_ok = (h >= self.low[0]) & (h <= self.high[0])
        return (hue_ok & (s >= self.low[1]) & (s <= self.high[1])
                & (v >= self.low[2]) & (v <= self.high[2]))


@dataclass(frozen=True)
class LabelRanges:
    """Color ranges of the UV paints plus the range separating the bag from the workspace in regular light."""
    handle: ColorRange = field(default_factory=lambda: ColorRange((64, 128, 128), (106, 255, 255)))
    rim: ColorRange = field(default_factory=lambda: ColorRange((234, 128, 128), (21, 255, 255)))
    bag: ColorRange = field(default_factory=lambda: ColorRange((0, 0, 150), (255, 70, 255)))


@dataclass(frozen=True)
class OpeningMetrics:
    """
    Rim hull metrics of one mask. For a mask without rim pixels: a_ch = 0, e_ch = E_MAX and
    hull, center and frame are None.
    """
    a_ch: float
    e_ch: float
    hull: Optional[Polygon]
    center: Optional[Tuple[float, float]]
    frame: Optional[AxisFrame]
    rim_pixel_count: int

    @property
    def closed(self) -> bool:
        return self.rim_pixel_count == 0

    def as_dict(self) -> dict:
        return {
            "a_ch": round(self.a_ch, 6),
            "e_ch": round(self.e_ch, 6),
            "center": None if self.center is None else [round(c, 3) for c in self.center],
            "rim_pixels": self.rim_pixel_count,
        }


CLOSED_OPENING = OpeningMetrics(a_ch=0.0, e_ch=E_MAX, hull=None, center=None, frame=None, rim_pixel_count=0)


def to_hsv(rgb) -> np.ndarray:
    """(H, W, 3) uint8 RGB array or PIL image to an (H, W, 3) uint8 HSV array."""
    image = rgb if isinstance(rgb, Image.Image) else Image.fromarray(np.asarray(rgb, dtype=np.uint8))
    return np.asarray(image.convert("RGB").convert("HSV"))


def uv_threshold_label(uv_image, bag_mask, ranges: LabelRanges, dilation_radius: int = 2,
                       min_component: int = 1) -> SegMask:
    """
    Label a UV image: red glow becomes rim, green glow becomes handle, the rest of bag_mask becomes bag.
    Each glow layer is dilated and cleaned of small components independently; handle wins over rim.
    :param uv_image: (H, W, 3) RGB array or PIL image taken under UV light
    :param bag_mask: (H, W) bool, bag versus workspace
    :param ranges: LabelRanges
    :param dilation_radius: disk radius in px, >= 0
    :param min_component: components smaller than this many px are dropped after dilation
    :return: SegMask
    """
    hsv = to_hsv(uv_image)
    bag_mask = np.asarray(bag_mask, dtype=bool)
    if hsv.shape[:2] != bag_mask.shape:
        raise DimensionMismatch(f"UV image {hsv.shape[:2]} and bag mask {bag_mask.shape} differ in size")
    if dilation_radius < 0:
        raise ValueError(f"dilation_radius must be >= 0, got {dilation_radius}")

    layers = {}
    for class_id, color_range in ((RIM, ranges.rim), (HANDLE, ranges.handle)):
        layer = geometry.dilate_layer(color_range.matches(hsv), dilation_radius)
        layers[class_id] = geometry.remove_small_components(layer, min_component)
    log.debug(f"uv labels: rim={int(layers[RIM].sum())} handle={int(layers[HANDLE].sum())} px")
    return SegMask.from_layers(bag_mask, layers[RIM], layers[HANDLE])


def bag_mask_from_regular(regular_image, ranges: LabelRanges) -> np.ndarray:
    """Separate the bag from the workspace in a regular-light image."""
    return ranges.bag.matches(to_hsv(regular_image))


def bag_area_fraction(mask: SegMask, cal: BagCalibration) -> float:
    return mask.foreground().sum() / cal.max_bag_area


def _hull_metrics(points: np.ndarray, mask: SegMask):
    """Hull, elongation and PCA frame of a pixel set, elongation taken over the filled hull."""
    hull = geometry.convex_hull(points)
    filled = geometry.fill_polygon(hull, mask.width, mask.height) if len(hull) >= 3 else points
    if len(filled) < 2:
        filled = points
    if len(np.unique(filled, axis=0)) < 2:
        return hull, E_MAX, None
    frame = geometry.pca_axes(filled)
    if frame.minor_len <= 1e-9:
        return hull, E_MAX, frame
    return hull, min(E_MAX, max(1.0, frame.major_len / frame.minor_len)), frame


def opening_metrics(mask: SegMask, cal: BagCalibration) -> OpeningMetrics:
    """
    a_ch = area of the convex hull of every rim pixel / max_hull_area
    e_ch = PCA major / minor length over the filled hull pixels, within [1, E_MAX]
    center = area centroid of the hull
    """
    rim = mask.pixels(RIM)
    if len(rim) == 0:
        return CLOSED_OPENING
    hull, e_ch, frame = _hull_metrics(rim, mask)
    return OpeningMetrics(a_ch=geometry.polygon_area(hull) / cal.max_hull_area,
                          e_ch=e_ch,
                          hull=hull,
                          center=geometry.polygon_centroid(hull),
                          frame=frame,
                          rim_pixel_count=len(rim))


def bag_metrics(mask: SegMask, cal: BagCalibration) -> OpeningMetrics:
    """
    Opening metrics approximated from the whole bag region instead of the rim: hull area over
    max_bag_area, elongation of the filled bag hull, centered on the bag centroid.
    """
    bag = mask.foreground_pixels()
    if len(bag) == 0:
        return CLOSED_OPENING
    hull, e_ch, frame = _hull_metrics(bag, mask)
    return OpeningMetrics(a_ch=geometry.polygon_area(hull) / cal.max_bag_area,
                          e_ch=e_ch,
                          hull=hull,
                          center=geometry.centroid(bag),
                          frame=frame,
                          rim_pixel_count=len(bag))


# Pseudo-image colors (RGB) of the synthetic paired images
REGULAR_COLORS = {BACKGROUND: (45, 45, 50), BAG: (225, 225, 220), RIM: (225, 225, 220), HANDLE: (225, 225, 220)}
UV_COLORS = {BACKGROUND: (10, 10, 25), BAG: (40, 35, 70), RIM: (250, 30, 40), HANDLE: (35, 245, 60)}


def render_pair(mask: SegMask) -> Tuple[np.ndarray, np.ndarray]:
    """
    Render a regular-light and a UV pseudo image from a mask: paint is invisible in regular light and
    glows red (rim) or green (handle) under UV.
    :return: (regular, uv), each (H, W, 3) uint8
    """
    regular = np.zeros(mask.shape + (3,), dtype=np.uint8)
    uv = np.zeros(mask.shape + (3,), dtype=np.uint8)
    for class_id in (BACKGROUND, BAG, RIM, HANDLE):
        layer = mask.labels == class_id
        regular[layer] = REGULAR_COLORS[class_id]
        uv[layer] = UV_COLORS[class_id]
    return regular, uv


def write_image(rgb: np.ndarray, path) -> None:
    Image.fromarray(np.asarray(rgb, dtype=np.uint8)).save(path, format="PNG")


def read_image(path) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"))
