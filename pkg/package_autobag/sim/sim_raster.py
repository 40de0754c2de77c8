#! /usr/bin/env python3
"""
Ground-truth rendering of a bag state as a SegMask, standing in for the overhead camera.
"""

import logging
import math

import numpy as np

from package_autobag.common import StateOutOfWorkspace
from package_autobag.perception import BagCalibration
from package_autobag.primitives import Workspace
from package_autobag.segmask import SegMask
from package_autobag.sim.common_sim import BagState
from package_autobag.sim.sim_shape import BagShape, Scene

log = logging.getLogger(__name__)

# Rim band in px: outer edge just beyond the analytic ellipse so the pixel-center hull keeps its area
RIM_OUTER_PAD = 0.25
RIM_INNER_PAD = 1.75


def pixel_grid(ws: Workspace):
    """Workspace cm coordinates of every pixel center, each (H, W)."""
    xs = (np.arange(ws.width_px) + 0.5) / ws.pixel_per_cm - ws.width / 2.0
    ys = (np.arange(ws.height_px) + 0.5) / ws.pixel_per_cm - ws.height / 2.0
    return np.meshgrid(xs, ys)


def rasterize(state: BagState, ws: Workspace, cal: BagCalibration, lobe_radius: float = 3.0) -> SegMask:
    """
    Body: filled superellipse, area s * max_bag_area, long axis along yaw.
    Rim (upward opening only): elliptical band about 2 px thick, area a* * max_hull_area, axis ratio e*,
    with a hidden arc of (1 - v) * 2pi centered on rim_gap_angle.
    Handles: filled lobes for each visible handle. Precedence handle > rim > bag.
    """
    scene = Scene(ws, cal)
    shape = BagShape(state, scene, lobe_radius)
    half_x, half_y = shape.extent()
    cx, cy = state.position
    if (state.off_workspace or abs(cx) + half_x > ws.width / 2.0 or abs(cy) + half_y > ws.height / 2.0):
        raise StateOutOfWorkspace(f"bag at ({cx:.1f}, {cy:.1f}) cm leaves the {ws.width}x{ws.height} cm workspace")

    gx, gy = pixel_grid(ws)
    body = shape.in_body(gx, gy)

    rim = np.zeros_like(body)
    if shape.upright and shape.rim_minor > 0:
        ppc = ws.pixel_per_cm
        p, q = shape.rim_major * ppc, shape.rim_minor * ppc
        u, v = shape.to_frame(gx, gy)
        u, v = u * ppc, v * ppc
        outer = (u / (p + RIM_OUTER_PAD)) ** 2 + (v / (q + RIM_OUTER_PAD)) ** 2 <= 1.0
        if p > RIM_INNER_PAD and q > RIM_INNER_PAD:
            inner = (u / (p - RIM_INNER_PAD)) ** 2 + (v / (q - RIM_INNER_PAD)) ** 2 < 1.0
        else:
            inner = np.zeros_like(outer)
        rim = outer & ~inner
        hidden = (1.0 - state.rim_visible_fraction) * math.pi
        if hidden > 0:
            angle = np.arctan2(v / q, u / p)
            offset = np.abs((angle - state.rim_gap_angle + math.pi) % (2.0 * math.pi) - math.pi)
            rim &= offset >= hidden

    handle = np.zeros_like(body)
    for center in shape.handle_centers():
        if center is not None:
            handle |= np.hypot(gx - center[0], gy - center[1]) <= lobe_radius

    mask = SegMask.from_layers(body, rim, handle)
    log.debug(f"rasterized {mask!r}")
    return mask
