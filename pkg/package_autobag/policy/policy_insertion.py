#! /usr/bin/env python3
"""
Insertion: split the opening into equal slabs along its major axis and drop one object at the center of each,
then two Pin-Pulls and a lift.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from package_autobag.common import EXECUTE, ClosedOpening
from package_autobag import geometry, primitives
from package_autobag.perception import OpeningMetrics
from package_autobag.primitives import at, defaults_for
from package_autobag.policy import policy_grasps
from package_autobag.policy.common_policy import Observation, PolicyContext
from package_autobag.sim import common_sim

log = logging.getLogger(__name__)


def insertion_plan(metrics: OpeningMetrics, n: int) -> List[Tuple[float, float]]:
    """
    Cut the hull with chords perpendicular to its major axis into n slabs of equal width and return the area
    centroid of each slab, ordered along the major axis.
    :param metrics: OpeningMetrics with an open hull
    :param n: number of objects, >= 1
    :return: n points in px
    """
    if n < 1:
        raise ValueError(f"need at least one object, got {n}")
    if metrics.a_ch <= 0 or metrics.hull is None or len(metrics.hull) < 3:
        raise ClosedOpening("no opening to insert into")
    hull = metrics.hull
    frame = metrics.frame if metrics.frame is not None else geometry.pca_axes(hull.array)
    u = np.asarray(frame.major_dir)
    along = hull.array @ u
    lo, hi = float(along.min()), float(along.max())
    width = (hi - lo) / n
    points = []
    for k in range(n):
        start, stop = lo + k * width, lo + (k + 1) * width
        slab = geometry.clip_polygon(geometry.clip_polygon(hull, u, start), -u, -stop)
        points.append(geometry.polygon_centroid(slab))
    return points


@dataclass
class InsertionResult:
    placements: List[dict] = field(default_factory=list)
    pinpulls: List[dict] = field(default_factory=list)
    lift_events: List[str] = field(default_factory=list)
    n_placed: int = 0
    n_contained: int = 0
    lifted: bool = False


def run_insertion(obs: Observation, n_objects: int, sim, ctx: PolicyContext = None, variant: str = None,
                  notes: list = None) -> InsertionResult:
    """
    Place n_objects at the insertion plan, Pin-Pull twice at the handle (or bag end) targets and lift by them.
    Raises ClosedOpening when the observation shows no opening.
    :param sim: SimHandle
    """
    ctx = ctx if ctx is not None else PolicyContext()
    ws = ctx.workspace
    variant = variant if variant is not None else ctx.settings.variant
    result = InsertionResult()

    plan = insertion_plan(obs.policy_metrics(variant), n_objects)
    for object_id, point in enumerate(plan):
        target = ws.to_cm(*point)
        events = sim.place(object_id, target)
        result.placements.append({"object": object_id, "point": [round(c, 4) for c in target],
                                  "events": list(events.tags)})
    result.n_placed = sim.state.count(common_sim.PLACED_IN_OPENING)

    pairs = policy_grasps.pinpull_targets(obs)
    template = defaults_for(primitives.PINPULL, EXECUTE, ctx.defaults)
    for pin, pull in pairs:
        action = at(template, ws.to_cm(*pin), ws.to_cm(*pull))
        violations = primitives.validate_action(action, ws)
        if violations:
            # a one-pixel-wide bag gives coincident targets
            if notes is not None:
                notes.append(f"pin-pull skipped: {'; '.join(violations)}")
            continue
        events = sim.apply(action)
        result.pinpulls.append({"action": primitives.to_dict(action), "events": list(events.tags)})

    (left, right) = pairs[1]
    contained, events = sim.lift([ws.to_cm(*left), ws.to_cm(*right)])
    result.lift_events = list(events.tags)
    result.lifted = common_sim.EV_LIFTED in events
    result.n_contained = contained
    log.info(f"insertion: placed {result.n_placed}/{n_objects}, contained {contained}")
    return result
