#! /usr/bin/env python3
"""
Segmenters produce the SegMask the policy sees. Each takes the simulator's ground truth through prepare()
(identity for mask-based segmenters, a rendered image pair for the threshold segmenter) and then segment().
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import ndimage

from package_autobag.common import BACKGROUND, BAG, RIM, HANDLE, ConfigError
from package_autobag import geometry, perception
from package_autobag.perception import LabelRanges
from package_autobag.segmask import SegMask

log = logging.getLogger(__name__)

ORACLE = "oracle"
NOISY = "noisy"
THRESHOLD = "threshold"
SEGMENTER_KINDS = (ORACLE, NOISY, THRESHOLD)


@dataclass(frozen=True)
class SegmenterConfig:
    kind: str = ORACLE
    p_drop: float = 0.0
    p_flip: float = 0.0
    erosion_r: int = 0
    dilation_radius: int = 2
    min_component: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.kind not in SEGMENTER_KINDS:
            raise ConfigError(f"segmenter.kind must be one of {', '.join(SEGMENTER_KINDS)}, got '{self.kind}'")
        for name in ("p_drop", "p_flip"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"segmenter.{name} must be in [0, 1]")
        if self.erosion_r < 0 or self.dilation_radius < 0 or self.min_component < 1:
            raise ConfigError("segmenter radii must be >= 0 and min_component >= 1")


class Segmenter:
    """Interface: prepare() turns a ground-truth mask into this segmenter's input, segment() labels it."""

    def prepare(self, truth: SegMask):
        return truth

    def segment(self, observation, rng: Optional[np.random.Generator] = None) -> SegMask:
        raise NotImplementedError


class OracleSegmenter(Segmenter):
    def segment(self, observation, rng=None) -> SegMask:
        return observation


class NoisySegmenter(Segmenter):
    """
    Ground truth with injected perception errors:
    rim and handle pixels drop to bag with p_drop, the rim erodes by erosion_r,
    then bag pixels touching the background turn into rim with p_flip.
    Without an explicit rng the output is a function of (mask, seed).
    """
    def __init__(self, p_drop: float = 0.0, p_flip: float = 0.0, erosion_r: int = 0, seed: int = 0) -> None:
        self.p_drop = p_drop
        self.p_flip = p_flip
        self.erosion_r = erosion_r
        self.seed = seed

    def segment(self, observation: SegMask, rng=None) -> SegMask:
        if rng is None:
            rng = np.random.default_rng(self.seed)
        labels = observation.labels.copy()
        # draw both fields every call so the stream position does not depend on the mask content
        drop = rng.random(labels.shape) < self.p_drop
        flip = rng.random(labels.shape) < self.p_flip

        painted = (labels == RIM) | (labels == HANDLE)
        labels[painted & drop] = BAG
        if self.erosion_r > 0:
            rim = labels == RIM
            labels[rim & ~geometry.erode_layer(rim, self.erosion_r)] = BAG
        near_background = ndimage.binary_dilation(labels == BACKGROUND, structure=geometry.EIGHT_CONNECTED)
        labels[(labels == BAG) & near_background & flip] = RIM
        return SegMask(labels)


class ThresholdSegmenter(Segmenter):
    """
    Offline labeling path: bag region from the regular-light image, rim and handle from the UV image.
    """
    def __init__(self, ranges: LabelRanges = None, dilation_radius: int = 2, min_component: int = 1) -> None:
        self.ranges = ranges if ranges is not None else LabelRanges()
        self.dilation_radius = dilation_radius
        self.min_component = min_component

    def prepare(self, truth: SegMask) -> Tuple[np.ndarray, np.ndarray]:
        return perception.render_pair(truth)

    def segment(self, observation, rng=None) -> SegMask:
        regular, uv = observation
        bag_mask = perception.bag_mask_from_regular(regular, self.ranges)
        return perception.uv_threshold_label(uv, bag_mask, self.ranges, self.dilation_radius, self.min_component)


def make_segmenter(cfg: SegmenterConfig, ranges: LabelRanges = None) -> Segmenter:
    if cfg.kind == NOISY:
        return NoisySegmenter(cfg.p_drop, cfg.p_flip, cfg.erosion_r, cfg.seed)
    elif cfg.kind == THRESHOLD:
        return ThresholdSegmenter(ranges, cfg.dilation_radius, cfg.min_component)
    return OracleSegmenter()
