#! /usr/bin/env python3
"""
Grasp point heuristics on the segmented mask. All points are pixel coordinates (x, y).
"""

import math
import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from package_autobag.common import BACKGROUND, RIM, EmptyBagMask, NoRim
from package_autobag import geometry
from package_autobag.segmask import SegMask

log = logging.getLogger(__name__)

# Step size when walking the bottom midpoint toward the bag centroid
WALK_STEP_PX = 0.5


def _walk_onto_bag(mask: SegMask, start: np.ndarray, target: Tuple[float, float]) -> Tuple[float, float]:
    """First foreground pixel on the segment start -> target; nearest foreground pixel to target otherwise."""
    fg = mask.foreground()
    target = np.asarray(target, dtype=float)
    n = max(1, int(math.ceil(np.linalg.norm(target - start) / WALK_STEP_PX)))
    for k in range(n + 1):
        p = start + (target - start) * (k / n)
        xi, yi = int(round(p[0])), int(round(p[1]))
        if 0 <= xi < mask.width and 0 <= yi < mask.height and fg[yi, xi]:
            return float(xi), float(yi)
    pixels = mask.foreground_pixels()
    nearest = pixels[np.argmin(np.hypot(pixels[:, 0] - target[0], pixels[:, 1] - target[1]))]
    return float(nearest[0]), float(nearest[1])


def bottom_point_from(mask: SegMask, reference: np.ndarray) -> Tuple[float, float]:
    """
    Midpoint of the bag rectangle edge whose two corners are jointly farthest from the reference points,
    moved toward the bag centroid until it lies on the bag.
    """
    bag = mask.foreground_pixels()
    if len(bag) == 0:
        raise EmptyBagMask("no bag pixels")
    corners = geometry.min_area_rectangle(bag).array
    distances, _ = cKDTree(np.asarray(reference, dtype=float).reshape(-1, 2)).query(corners)
    scores = [distances[i] + distances[(i + 1) % 4] for i in range(4)]
    best = int(np.argmax(scores))
    midpoint = (corners[best] + corners[(best + 1) % 4]) / 2.0
    return _walk_onto_bag(mask, midpoint, geometry.centroid(bag))


def bottom_point(mask: SegMask) -> Tuple[float, float]:
    """
    Compress grasp: the bag bottom is the rectangle side farthest from the rim.
    Raises NoRim when the mask shows no rim.
    """
    rim = mask.pixels(RIM)
    if len(rim) == 0:
        raise NoRim("bottom_point needs rim pixels")
    return bottom_point_from(mask, rim)


def bottom_point_with_fallback(mask: SegMask, handle_components: Sequence[np.ndarray] = (),
                               last_rim_center: Optional[Tuple[float, float]] = None,
                               notes: list = None) -> Tuple[Tuple[float, float], str]:
    """
    bottom_point, falling back without a rim to: the handles (they sit at the opening end), the last rim
    center seen, and finally the image top (the camera side), in that order.
    :return: (point, rule)
    """
    try:
        return bottom_point(mask), "rim"
    except NoRim:
        pass
    if len(handle_components):
        reference, rule = np.concatenate(list(handle_components)), "no-rim-handles"
    elif last_rim_center is not None:
        reference, rule = np.asarray([last_rim_center]), "no-rim-last-center"
    else:
        # reference row above the image: the edge with the largest y wins
        bag = mask.foreground_pixels()
        if len(bag) == 0:
            raise EmptyBagMask("no bag pixels")
        xs = np.arange(mask.width, dtype=float)
        reference, rule = np.stack([xs, np.full_like(xs, -10.0 * mask.height)], axis=1), "no-rim-camera-top"
    if notes is not None:
        notes.append(f"bottom_point: no rim visible, fallback '{rule}'")
    log.info(f"bottom_point fallback {rule}")
    return bottom_point_from(mask, reference), rule


def boundary_pixels(mask: SegMask) -> np.ndarray:
    """Foreground pixels 8-adjacent to background or to the image border."""
    fg = mask.foreground()
    padded = np.pad(mask.labels == BACKGROUND, 1, constant_values=True)
    near = ndimage.binary_dilation(padded, structure=geometry.EIGHT_CONNECTED)[1:-1, 1:-1]
    ys, xs = np.nonzero(fg & near)
    return np.stack([xs, ys], axis=1).astype(np.int64)


def row_endpoints(mask: SegMask, centroid: Tuple[float, float]) -> Tuple[Tuple[float, float], Tuple[float, float]]:
    """
    Left and right extreme bag pixels on the horizontal line through the centroid (nearest occupied row).
    """
    fg = mask.foreground()
    rows = np.flatnonzero(fg.any(axis=1))
    if len(rows) == 0:
        raise EmptyBagMask("no bag pixels")
    row = int(rows[np.argmin(np.abs(rows - centroid[1]))])
    cols = np.flatnonzero(fg[row])
    return (float(cols[0]), float(row)), (float(cols[-1]), float(row))


def pinpull_targets(obs) -> Tuple[Tuple[Tuple[float, float], Tuple[float, float]],
                                  Tuple[Tuple[float, float], Tuple[float, float]]]:
    """
    Handle centers when two handles are visible, else the row extremes through the bag centroid.
    Targets are ordered left to right. The first Pin-Pull pins the right target and pulls the left one,
    the second pins the left and pulls the right.
    :return: ((pin, pull), (pin, pull))
    """
    if obs.bag_centroid is None:
        raise EmptyBagMask("no bag pixels")
    if len(obs.handle_components) >= 2:
        largest = sorted(obs.handle_components, key=lambda c: -len(c))[:2]
        left, right = sorted((geometry.centroid(c) for c in largest), key=lambda p: (p[0], p[1]))
    else:
        left, right = row_endpoints(obs.mask, obs.bag_centroid)
    return (right, left), (left, right)


def sample_pixel(pixels: np.ndarray, rng) -> Tuple[float, float]:
    """Uniform choice among pixel coordinates; the middle pixel in raster order without an rng."""
    if len(pixels) == 0:
        raise EmptyBagMask("no pixels to sample from")
    index = len(pixels) // 2 if rng is None else rng.integers(len(pixels))
    x, y = pixels[index]
    return float(x), float(y)


def handle_grasp(handle_components: List[np.ndarray]) -> Tuple[float, float]:
    """Center of the largest visible handle."""
    return geometry.centroid(max(handle_components, key=len))
