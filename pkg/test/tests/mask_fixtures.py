"""
Analytic mask and observation fixtures shared by the perception, policy and CLI tests.
"""

import numpy as np

from package_autobag.common import BACKGROUND, BAG, RIM, HANDLE
from package_autobag.geometry import AxisFrame
from package_autobag.perception import OpeningMetrics
from package_autobag.policy.common_policy import Observation, PolicyContext
from package_autobag.primitives import Workspace
from package_autobag.segmask import SegMask


def grid(width, height):
    ys, xs = np.mgrid[0:height, 0:width]
    return xs.astype(float), ys.astype(float)


def ring_layer(width, height, center, radius, thickness=2.0, pad=0.25):
    """Pixel centers with radius - thickness < d <= radius + pad."""
    xs, ys = grid(width, height)
    d = np.hypot(xs - center[0], ys - center[1])
    return (d <= radius + pad) & (d > radius - thickness)


def rectangle_outline(width, height, x0, y0, w, h, thickness=2):
    """Band of the axis-aligned rectangle whose pixel centers span [x0, x0 + w] x [y0, y0 + h]."""
    xs, ys = grid(width, height)
    inside = (xs >= x0) & (xs <= x0 + w) & (ys >= y0) & (ys <= y0 + h)
    core = (xs >= x0 + thickness) & (xs <= x0 + w - thickness) & (ys >= y0 + thickness) & (ys <= y0 + h - thickness)
    return inside & ~core


def bag_with_rim(width, height, bag_box, rim_layer, handle_layer=None):
    """bag_box = (x0, y0, x1, y1) inclusive."""
    labels = np.full((height, width), BACKGROUND, dtype=np.uint8)
    x0, y0, x1, y1 = bag_box
    labels[y0:y1 + 1, x0:x1 + 1] = BAG
    labels[rim_layer] = RIM
    if handle_layer is not None:
        labels[handle_layer] = HANDLE
    return SegMask(labels)


def bag_only(width, height, bag_box):
    labels = np.full((height, width), BACKGROUND, dtype=np.uint8)
    x0, y0, x1, y1 = bag_box
    labels[y0:y1 + 1, x0:x1 + 1] = BAG
    return SegMask(labels)


# Policy fixtures: a 70 x 90 px mask on a 35 x 45 cm workspace at 2 px/cm, bag box centered on the image
WS = Workspace(35.0, 45.0, 2.0)
CTX = PolicyContext(workspace=WS)
ALIGNED = AxisFrame(center=(34.5, 20.0), major_dir=(0.0, 1.0), minor_dir=(-1.0, 0.0), major_len=2.0, minor_len=1.0)


def centered_mask(shift_x=0):
    """Bag box 30 x 60 px with the rim on its top two rows, shifted right by shift_x px."""
    labels = np.zeros((90, 70), dtype=np.uint8)
    labels[15:75, 20 + shift_x:50 + shift_x] = BAG
    labels[15:17, 20 + shift_x:50 + shift_x] = RIM
    return SegMask(labels)


def observation(a_ch, e_ch, bag_fraction=0.6, frame=ALIGNED, shift_x=0):
    """Observation with the given metrics; bag_centroid follows the unclipped box."""
    metrics = OpeningMetrics(a_ch=a_ch, e_ch=e_ch, hull=None, center=None if frame is None else frame.center,
                             frame=frame, rim_pixel_count=60)
    return Observation(mask=centered_mask(shift_x), metrics=metrics, bag_fraction=bag_fraction,
                       bag_centroid=(34.5 + shift_x, 44.5), handle_components=[])
