#! /usr/bin/env python3
"""
Two-stage opening state machine.

Stage 1 turns the opening upward: Shake a small bag, Compress the bottom of a large one and Flip it.
Stage 2 enlarges the opening: align the minor axis with the image horizontal, then Dilate across it.
"""

import math
import logging
from dataclasses import replace
from typing import Tuple, Union

from package_autobag.common import (STAGE1, STAGE2, INSERTION, EXECUTE, AUTOBAG_G, AUTOBAG_C, AUTOBAG_D,
                                    EmptyBagMask, StepBudgetExhausted)
from package_autobag import primitives
from package_autobag.primitives import at, defaults_for
from package_autobag.policy import policy_grasps
from package_autobag.policy.common_policy import (AdvanceStage, Observation, PolicyContext, PolicyState,
                                                  PolicyThresholds, OPENING_STAGES, offset_from_center)

log = logging.getLogger(__name__)


def _act(action, ps: PolicyState, rule: str, ctx: PolicyContext, counted: bool = True):
    if not counted:
        return action, replace(ps, last_rule=rule)
    if ps.steps_used >= ctx.budget:
        raise StepBudgetExhausted(f"{ps.steps_used} of {ctx.budget} actions used, next would be {action.kind}")
    return action, replace(ps, steps_used=ps.steps_used + 1, last_action_kind=action.kind, last_rule=rule)


def _advance(stage: str, ps: PolicyState, rule: str):
    log.info(f"advance {ps.stage} -> {stage} ({rule})")
    return AdvanceStage(stage, rule), replace(ps, stage=stage, last_rule=rule)


def _shake(obs: Observation, ps: PolicyState, rule: str, ctx: PolicyContext, rng):
    ws = ctx.workspace
    if ps.variant == AUTOBAG_G:
        point = policy_grasps.sample_pixel(obs.mask.foreground_pixels(), rng)
    elif obs.handle_components:
        point = policy_grasps.handle_grasp(obs.handle_components)
        rule += "-handle"
    else:
        point = policy_grasps.sample_pixel(policy_grasps.boundary_pixels(obs.mask), rng)
        rule += "-boundary"
    return _act(at(defaults_for(primitives.SHAKE, EXECUTE, ctx.defaults), ws.to_cm(*point)), ps, rule, ctx)


def _flip(obs: Observation, ps: PolicyState, rule: str, ctx: PolicyContext):
    ws = ctx.workspace
    left, right = policy_grasps.row_endpoints(obs.mask, obs.bag_centroid)
    action = at(defaults_for(primitives.FLIP, EXECUTE, ctx.defaults), ws.to_cm(*left), ws.to_cm(*right))
    return _act(action, ps, rule, ctx)


def _compress(obs: Observation, ps: PolicyState, rule: str, ctx: PolicyContext, rng, notes):
    ws = ctx.workspace
    if ps.variant == AUTOBAG_G:
        point = policy_grasps.sample_pixel(obs.mask.foreground_pixels(), rng)
    else:
        point, how = policy_grasps.bottom_point_with_fallback(obs.mask, obs.handle_components, ps.last_rim_center,
                                                              notes)
        if how != "rim":
            rule += f"-{how}"
    return _act(at(defaults_for(primitives.COMPRESS, EXECUTE, ctx.defaults), ws.to_cm(*point)), ps, rule, ctx)


def _dilate(center, ps: PolicyState, rule: str, ctx: PolicyContext):
    """Grippers either side of the center on the image horizontal, pulling apart along it."""
    ws = ctx.workspace
    cx, cy = ws.to_cm(*center)
    offset = ctx.defaults.dilate_exec_center_offset
    action = at(defaults_for(primitives.DILATE, EXECUTE, ctx.defaults), (cx - offset, cy), (cx + offset, cy))
    return _act(action, ps, rule, ctx)


def autobag_step(obs: Observation, ps: PolicyState, th: PolicyThresholds = None, ctx: PolicyContext = None,
                 rng=None, notes: list = None) -> Tuple[Union[object, AdvanceStage], PolicyState]:
    """
    One decision of the opening stages.
    :param obs: Observation
    :param ps: PolicyState in Stage1 or Stage2
    :param th: PolicyThresholds (ctx.thresholds when None)
    :param ctx: PolicyContext
    :param rng: SimRandom for boundary and surface samples
    :param notes: list collecting fallbacks taken
    :return: (Action or AdvanceStage, new PolicyState)
    """
    ctx = ctx if ctx is not None else PolicyContext()
    th = th if th is not None else ctx.thresholds
    if ps.stage not in OPENING_STAGES:
        raise ValueError(f"autobag_step called in stage {ps.stage}")
    if obs.bag_centroid is None:
        raise EmptyBagMask("no bag pixels in the observation")
    ws = ctx.workspace
    variant = ps.variant
    metrics = obs.policy_metrics(variant)
    if obs.metrics.center is not None:
        ps = replace(ps, last_rim_center=obs.metrics.center)

    if offset_from_center(obs.bag_centroid, ws) > ctx.settings.recenter_radius_cm:
        return _act(at(defaults_for(primitives.RECENTER, EXECUTE, ctx.defaults), ws.to_cm(*obs.bag_centroid)),
                    ps, "off-center-recenter", ctx, counted=False)

    if ps.stage == STAGE1:
        if not ps.initial_check_done:
            ps = replace(ps, initial_check_done=True)
            if th.stage1_exit(metrics, variant):
                return _advance(STAGE2, ps, "initial-opening")
        if ps.last_action_kind == primitives.COMPRESS:
            return _flip(obs, ps, "compress-then-flip", ctx)
        if ps.last_action_kind == primitives.FLIP:
            if th.stage1_exit(metrics, variant):
                return _advance(STAGE2, ps, "flip-opened")
            return _shake(obs, ps, "flip-failed-shake", ctx, rng)
        if obs.bag_fraction < th.S1:
            return _shake(obs, ps, "small-area-shake", ctx, rng)
        if variant == AUTOBAG_C:
            return _flip(obs, ps, "large-area-flip", ctx)
        return _compress(obs, ps, "large-area-compress", ctx, rng, notes)

    if variant == AUTOBAG_D:
        return _advance(INSERTION, ps, "skip-dilate")
    if th.stage2_exit(metrics, variant):
        return _advance(INSERTION, ps, "opening-ready")
    if metrics.frame is None or metrics.center is None:
        return _dilate(obs.bag_centroid, ps, "no-opening-dilate-bag-center", ctx)
    angle = metrics.frame.minor_angle
    if abs(angle) > math.radians(ctx.settings.rotate_tolerance_deg):
        action = at(defaults_for(primitives.ROTATE, EXECUTE, ctx.defaults), ws.to_cm(*obs.bag_centroid))
        return _act(replace(action, gamma=-angle), ps, "align-minor-axis", ctx)
    return _dilate(metrics.center, ps, "dilate-center", ctx)
