#! /usr/bin/env python3
"""
Self-supervised data collection: random primitives under a few rules that keep the bag on the table and the
configurations diverse.
"""

import math
import logging
from dataclasses import replace
from typing import Optional, Tuple

from package_autobag.common import COLLECT, EmptyBagMask
from package_autobag import primitives
from package_autobag.primitives import at, defaults_for
from package_autobag.policy import policy_grasps
from package_autobag.policy.common_policy import Observation, PolicyContext, offset_from_center

log = logging.getLogger(__name__)

LARGE_BAG_KINDS = (primitives.ROTATE, primitives.SHAKE, primitives.FOLD, primitives.COMPRESS, primitives.FLIP)
SMALL_BAG_KINDS = (primitives.ROTATE, primitives.SHAKE, primitives.COMPRESS)


def collect_policy(obs: Observation, last_kind: Optional[str], rng, ctx: PolicyContext = None) -> Tuple[object, str]:
    """
    Rules in priority order:
    (i) bag centroid off center -> Recenter at the centroid
    (ii) last action Compress -> Flip
    (iii) bag area at or above the threshold -> uniform over Rotate, Shake, Fold, Compress, Flip
    (iv) otherwise -> uniform over Rotate, Shake, Compress
    :param rng: SimRandom
    :return: (action, rule)
    """
    ctx = ctx if ctx is not None else PolicyContext()
    ws = ctx.workspace
    if obs.bag_centroid is None:
        raise EmptyBagMask("collect_policy needs bag pixels")

    def template(kind):
        return defaults_for(kind, COLLECT, ctx.defaults)

    if offset_from_center(obs.bag_centroid, ws) > ctx.settings.recenter_radius_cm:
        return at(template(primitives.RECENTER), ws.to_cm(*obs.bag_centroid)), "off-center-recenter"
    if last_kind == primitives.COMPRESS:
        left, right = policy_grasps.row_endpoints(obs.mask, obs.bag_centroid)
        return at(template(primitives.FLIP), ws.to_cm(*left), ws.to_cm(*right)), "compress-then-flip"

    if obs.bag_fraction >= ctx.settings.collect_area_threshold:
        kind, rule = rng.choice(LARGE_BAG_KINDS), "large-area-uniform"
    else:
        kind, rule = rng.choice(SMALL_BAG_KINDS), "small-area-uniform"

    bag = obs.mask.foreground_pixels()
    if kind in (primitives.SHAKE, primitives.FOLD):
        point = policy_grasps.sample_pixel(policy_grasps.boundary_pixels(obs.mask), rng)
    elif kind == primitives.FLIP:
        left, right = policy_grasps.row_endpoints(obs.mask, obs.bag_centroid)
        return at(template(kind), ws.to_cm(*left), ws.to_cm(*right)), rule
    else:
        point = policy_grasps.sample_pixel(bag, rng)
    action = at(template(kind), ws.to_cm(*point))
    if kind == primitives.ROTATE:
        action = replace(action, gamma=rng.uniform(-math.pi, math.pi))
    log.debug(f"collect {rule}: {action}")
    return action, rule
