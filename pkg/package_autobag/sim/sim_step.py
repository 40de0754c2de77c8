#! /usr/bin/env python3
"""
State transitions of the abstract bag: initial tiers, one transition per primitive, object placement and lift.

Every stochastic branch draws from its own named substream of the step's SimRandom, so adding a branch never
perturbs the draws of the others.
"""

import math
import logging
from dataclasses import replace
from typing import List, Sequence, Tuple

from package_autobag.common import UP, DOWN, SIDEWAYS, OPENING_DIRS, E_MAX, InvalidTier, InvalidAction
from package_autobag import primitives
from package_autobag.sim import common_sim
from package_autobag.sim.common_sim import (BagState, ObjectState, SimConfig, SimRandom, StepEvents, normalized)
from package_autobag.sim.sim_shape import (BagShape, Scene, REGION_HANDLE, REGION_RIM, REGION_BOTTOM,
                                           REGION_OFF)

log = logging.getLogger(__name__)

TIERS = (1, 2, 3)
TIER_POSITION_JITTER_CM = 3.0


def init_tier(tier: int, cfg: SimConfig, rng: SimRandom, scene: Scene = None, n_objects: int = 2) -> BagState:
    """
    Tier 1: facing up with a small, elongated opening.
    Tier 2: expanded, lying sideways, no opening.
    Tier 3: compressed, any direction, handles hidden.
    """
    if tier not in TIERS:
        raise InvalidTier(f"tier must be one of {TIERS}, got {tier!r}")
    scene = scene if scene is not None else Scene.default()

    def handles():
        return rng.child("handle", 0).bernoulli(0.8), rng.child("handle", 1).bernoulli(0.8)

    if tier == 1:
        state = BagState(opening_dir=UP,
                         opening_fraction=rng.child("a").uniform(0.05, 0.15),
                         elongation=rng.child("e").uniform(2.0, 6.0),
                         surface_fraction=rng.child("s").uniform(0.6, 0.8),
                         rim_visible_fraction=rng.child("v").uniform(0.8, 1.0),
                         handles_visible=handles())
    elif tier == 2:
        state = BagState(opening_dir=SIDEWAYS,
                         opening_fraction=0.0,
                         elongation=E_MAX,
                         surface_fraction=rng.child("s").uniform(0.55, 0.8),
                         handles_visible=handles())
    else:
        opening_dir = rng.child("dir").choice(OPENING_DIRS)
        state = BagState(opening_dir=opening_dir,
                         opening_fraction=rng.child("a").uniform(cfg.shake_open_lo, cfg.shake_open_hi),
                         elongation=rng.child("e").uniform(cfg.shake_elong_lo, cfg.shake_elong_hi),
                         surface_fraction=rng.child("s").uniform(0.2, 0.5),
                         rim_visible_fraction=rng.child("v").uniform(cfg.rim_visible_lo, 1.0),
                         handles_visible=(False, False))
    jitter = rng.child("position")
    state = replace(state,
                    position=(jitter.uniform(-TIER_POSITION_JITTER_CM, TIER_POSITION_JITTER_CM),
                              jitter.uniform(-TIER_POSITION_JITTER_CM, TIER_POSITION_JITTER_CM)),
                    yaw=rng.child("yaw").uniform(-math.pi, math.pi),
                    rim_gap_angle=rng.child("gap").uniform(-math.pi, math.pi),
                    objects=tuple(ObjectState(i) for i in range(n_objects)))
    return normalized(state, scene.hull_to_bag)


def _resample_opening(state: BagState, cfg: SimConfig, rng: SimRandom, p_up: float) -> BagState:
    """New random configuration after the bag is lifted and dropped: mostly closed, rarely facing up."""
    if rng.child("up").bernoulli(p_up):
        opening_dir = UP
    else:
        opening_dir = rng.child("dir").choice((DOWN, SIDEWAYS))
    s = state.surface_fraction
    p_handle = min(1.0, cfg.p_handle_visible_scale * s)
    return replace(state,
                   opening_dir=opening_dir,
                   opening_fraction=rng.child("a").uniform(cfg.shake_open_lo, cfg.shake_open_hi),
                   elongation=rng.child("e").uniform(cfg.shake_elong_lo, cfg.shake_elong_hi),
                   handles_visible=(rng.child("handle", 0).bernoulli(p_handle),
                                    rng.child("handle", 1).bernoulli(p_handle)),
                   rim_visible_fraction=rng.child("v").uniform(cfg.rim_visible_lo, 1.0),
                   rim_gap_angle=rng.child("gap").uniform(-math.pi, math.pi),
                   yaw=rng.child("yaw").uniform(-math.pi, math.pi),
                   bottom_flat=False,
                   latent_opening=0.0,
                   latent_elongation=E_MAX)


def _shift(position: Tuple[float, float], rng: SimRandom, radius: float) -> Tuple[float, float]:
    return (position[0] + rng.child("dx").uniform(-radius, radius),
            position[1] + rng.child("dy").uniform(-radius, radius))


def step(state: BagState, action, cfg: SimConfig, rng: SimRandom, scene: Scene = None) -> Tuple[BagState, StepEvents]:
    """
    Apply one primitive.
    :return: (successor state, events of the branches that fired)
    """
    scene = scene if scene is not None else Scene.default()
    violations = primitives.validate_action(action, scene.workspace)
    if violations:
        raise InvalidAction(f"{action.kind}: {'; '.join(violations)}")
    events = StepEvents()
    shape = BagShape(state, scene, cfg.handle_lobe_radius_cm)
    kind = action.kind

    if kind == primitives.RECENTER:
        state = replace(state, position=(0.0, 0.0))
        events.add(common_sim.EV_RECENTERED)

    elif kind == primitives.ROTATE:
        state = replace(state, yaw=state.yaw + action.gamma,
                        position=_shift(state.position, rng.child("rotate"), cfg.rotate_jitter_cm))
        events.add(common_sim.EV_ROTATED)

    elif kind == primitives.SHAKE:
        branch = rng.child("shake")
        p_up = cfg.p_up_shake
        if shape.on_handle_lobe(action.x, action.y):
            p_up = min(1.0, p_up * cfg.handle_shake_multiplier)
            events.add(common_sim.EV_SHAKE_HANDLE)
        s = min(1.0, state.surface_fraction + branch.child("s").uniform(cfg.shake_s_lo, cfg.shake_s_hi))
        state = _resample_opening(replace(state, surface_fraction=s), cfg, branch, p_up)
        state = replace(state, position=_shift(state.position, branch, cfg.shake_jitter_cm))
        if state.opening_dir == UP:
            events.add(common_sim.EV_SHAKE_UP)

    elif kind == primitives.FOLD:
        s = state.surface_fraction - rng.child("fold").uniform(cfg.fold_s_lo, cfg.fold_s_hi)
        state = replace(state, surface_fraction=max(cfg.min_surface_fraction, s), opening_fraction=0.0)
        events.add(common_sim.EV_FOLDED)

    elif kind == primitives.COMPRESS:
        if shape.is_bottom(action.x, action.y):
            events.add(common_sim.EV_COMPRESS_BOTTOM)
            # the bag hangs opening-down while pressed, air inflates the hidden opening
            latent = min(1.0, max(state.opening_fraction, state.latent_opening) + cfg.compress_inflate)
            state = replace(state,
                            bottom_flat=rng.child("flatten").bernoulli(cfg.p_flatten),
                            opening_dir=DOWN,
                            latent_opening=latent,
                            latent_elongation=cfg.compress_elongation,
                            opening_fraction=0.0)
            if state.bottom_flat:
                events.add(common_sim.EV_FLATTENED)

    elif kind == primitives.FLIP:
        branch = rng.child("flip")
        if state.bottom_flat and state.opening_dir == DOWN:
            if branch.child("up").bernoulli(cfg.p_flip_up):
                state = replace(state, opening_dir=UP, opening_fraction=state.latent_opening,
                                elongation=state.latent_elongation, rim_visible_fraction=1.0,
                                latent_opening=0.0, latent_elongation=E_MAX)
                events.add(common_sim.EV_FLIP_UP)
        else:
            state = _resample_opening(state, cfg, branch, cfg.p_flip_up_unflat)
            if state.opening_dir == UP:
                events.add(common_sim.EV_FLIP_UP)

    elif kind == primitives.DILATE:
        state = _dilate(state, action, cfg, rng.child("dilate"), shape, events)

    elif kind == primitives.PINPULL:
        single = rng.child("pinpull").bernoulli(cfg.p_single_layer_pinpull)
        state = replace(state, grasped_layers=common_sim.SINGLE_LAYER if single else common_sim.DOUBLE_LAYER)
        events.add(common_sim.EV_SINGLE_LAYER if single else common_sim.EV_DOUBLE_LAYER)

    if rng.child("bump").bernoulli(cfg.p_bump_off_workspace):
        state = replace(state, off_workspace=True)
        events.add(common_sim.EV_OFF_WORKSPACE)

    return normalized(state, scene.hull_to_bag), events


def _dilate(state: BagState, action, cfg: SimConfig, rng: SimRandom, shape: BagShape,
            events: StepEvents) -> BagState:
    """
    Both grippers inside r_d of the true opening center of an upward opening: the opening grows and rounds.
    Otherwise the rim is squeezed and the bag drifts along the pull. A slip (torque stop) drags the bag instead.
    """
    if rng.child("slip").bernoulli(cfg.p_slip):
        events.add(common_sim.EV_DILATE_SLIP)
        return replace(state, position=(state.position[0] + action.d * math.cos(action.theta),
                                        state.position[1] + action.d * math.sin(action.theta)))
    cx, cy = shape.center
    centered = all(math.hypot(x - cx, y - cy) <= cfg.dilate_radius_cm for x, y in action.grasp_points())
    if centered and state.opening_dir == UP:
        events.add(common_sim.EV_DILATE_CENTERED)
        return replace(state,
                       opening_fraction=min(1.0, state.opening_fraction + cfg.dilate_delta_a),
                       elongation=max(1.0, 1.0 + (state.elongation - 1.0) * cfg.dilate_rho))
    events.add(common_sim.EV_DILATE_ASYMMETRIC)
    return replace(state,
                   opening_fraction=state.opening_fraction * cfg.asymmetric_factor,
                   position=(state.position[0] + cfg.dilate_drift_cm * math.cos(action.theta),
                             state.position[1] + cfg.dilate_drift_cm * math.sin(action.theta)))


def place_object(state: BagState, object_id: int, point: Tuple[float, float], cfg: SimConfig, rng: SimRandom,
                 scene: Scene = None) -> Tuple[BagState, StepEvents]:
    """
    Drop one staged object at a point (cm). It lands in the opening when the jittered point is inside the
    opening shrunk by the object radius and the opening has room left for one more object.
    """
    scene = scene if scene is not None else Scene.default()
    shape = BagShape(state, scene)
    events = StepEvents()
    target = state.objects[object_id]
    if target.status != common_sim.STAGED:
        raise InvalidAction(f"object {object_id} is already {target.status}")
    x = point[0] + rng.child("jx").uniform(-cfg.place_jitter_cm, cfg.place_jitter_cm)
    y = point[1] + rng.child("jy").uniform(-cfg.place_jitter_cm, cfg.place_jitter_cm)
    capacity = int(shape.opening_area // (cfg.object_packing * math.pi * cfg.object_radius_cm ** 2))
    inside = shape.upright and shape.in_opening(x, y, cfg.object_radius_cm)
    if inside and state.count(common_sim.PLACED_IN_OPENING) < capacity:
        status = common_sim.PLACED_IN_OPENING
        events.add(common_sim.EV_PLACED_IN)
    else:
        status = common_sim.PLACED_OUTSIDE
        events.add(common_sim.EV_PLACED_OUT)
    objects = list(state.objects)
    objects[object_id] = replace(target, position=(x, y), status=status)
    return replace(state, objects=tuple(objects)), events


def _set_status(state: BagState, rule) -> BagState:
    return replace(state, objects=tuple(replace(o, status=rule(o)) if o.status == common_sim.PLACED_IN_OPENING
                                        else o for o in state.objects))


def lift(state: BagState, grasp_points: Sequence[Tuple[float, float]], cfg: SimConfig, rng: SimRandom,
         scene: Scene = None) -> Tuple[BagState, int, StepEvents]:
    """
    Lift the bag by two grasp points.
    Handle or rim grasps on both sides keep every placed object; a bottom grasp turns the bag over and
    every object falls out; other body grasps keep each object with p_side_contain.
    A slipped grasp, or a grasp that misses the bag, means the bag is never lifted.
    :return: (state, number of contained objects, events)
    """
    scene = scene if scene is not None else Scene.default()
    shape = BagShape(state, scene, cfg.handle_lobe_radius_cm)
    events = StepEvents()
    regions: List[str] = [shape.grasp_region(x, y, cfg) for x, y in grasp_points]
    log.debug(f"lift grasp regions: {regions}")

    layers = state.grasped_layers
    if layers == common_sim.NO_LAYERS:
        single = rng.child("layers").bernoulli(cfg.p_single_layer_plain)
        layers = common_sim.SINGLE_LAYER if single else common_sim.DOUBLE_LAYER
    p_slip = cfg.p_grasp_slip_double if layers == common_sim.DOUBLE_LAYER else cfg.p_grasp_slip
    if REGION_OFF in regions or rng.child("slip").bernoulli(p_slip):
        events.add(common_sim.EV_LIFT_SLIP)
        return replace(state, grasped_layers=layers), 0, events

    events.add(common_sim.EV_LIFTED)
    if REGION_BOTTOM in regions:
        events.add(common_sim.EV_BOTTOM_GRASP)
        state = _set_status(state, lambda o: common_sim.FALLEN_OUT)
    elif all(r in (REGION_HANDLE, REGION_RIM) for r in regions):
        state = _set_status(state, lambda o: common_sim.CONTAINED)
    else:
        keep = rng.child("side")
        state = _set_status(state, lambda o: common_sim.CONTAINED
                            if keep.child(o.id).bernoulli(cfg.p_side_contain) else common_sim.FALLEN_OUT)
    if state.count(common_sim.FALLEN_OUT):
        events.add(common_sim.EV_FELL_OUT)
    return replace(state, grasped_layers=layers), state.count(common_sim.CONTAINED), events
