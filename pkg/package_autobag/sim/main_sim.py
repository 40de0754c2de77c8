#! /usr/bin/env python3
"""
SimHandle owns one simulated bag for one trial: it renders ground truth, applies primitives and runs the
insertion-side operations, drawing every branch from the trial's substreams.
"""

import logging
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple

from package_autobag.common import StateOutOfWorkspace
from package_autobag.segmask import SegMask, write_mask
from package_autobag.sim import sim_step, sim_raster
from package_autobag.sim.common_sim import BagState, SimConfig, SimRandom, StepEvents
from package_autobag.sim.sim_shape import Scene

log = logging.getLogger(__name__)


class SimHandle:
    """
    :param state: initial BagState
    :param cfg: SimConfig
    :param rng: trial root stream; steps use rng.child("step", i)
    :param scene: Scene
    """
    def __init__(self, state: BagState, cfg: SimConfig, rng: SimRandom, scene: Scene) -> None:
        self.state = state
        self.cfg = cfg
        self.rng = rng
        self.scene = scene
        self.steps = 0
        self.placements = 0

    @classmethod
    def start(cls, tier: int, cfg: SimConfig, rng: SimRandom, scene: Scene = None, n_objects: int = 2) -> "SimHandle":
        scene = scene if scene is not None else Scene.default()
        state = sim_step.init_tier(tier, cfg, rng.child("init"), scene, n_objects)
        log.debug(f"tier {tier} start: {state.as_dict()}")
        return cls(state, cfg, rng, scene)

    def render(self) -> SegMask:
        return sim_raster.rasterize(self.state, self.scene.workspace, self.scene.calibration,
                                    self.cfg.handle_lobe_radius_cm)

    def apply(self, action) -> StepEvents:
        self.state, events = sim_step.step(self.state, action, self.cfg, self.rng.child("step", self.steps),
                                           self.scene)
        self.steps += 1
        return events

    def place(self, object_id: int, point: Tuple[float, float]) -> StepEvents:
        self.state, events = sim_step.place_object(self.state, object_id, point, self.cfg,
                                                   self.rng.child("place", object_id), self.scene)
        self.placements += 1
        return events

    def lift(self, grasp_points: Sequence[Tuple[float, float]]) -> Tuple[int, StepEvents]:
        self.state, contained, events = sim_step.lift(self.state, grasp_points, self.cfg, self.rng.child("lift"),
                                                      self.scene)
        return contained, events


def rollout(sim: SimHandle, choose_action: Callable, steps: int, out_dir: Optional[Path] = None) -> List[dict]:
    """
    Scripted rollout: render, ask choose_action(mask, last_kind, step_index) for a primitive, apply it.
    Writes step_NNN.png masks to out_dir when given. Stops early when the bag leaves the workspace.
    :return: one summary dict per step
    """
    summary = []
    last_kind = None
    for index in range(steps):
        try:
            mask = sim.render()
        except StateOutOfWorkspace as e:
            log.info(f"rollout stopped at step {index}: {e}")
            break
        if out_dir is not None:
            write_mask(mask, Path(out_dir) / f"step_{index:03d}.png")
        action = choose_action(mask, last_kind, index)
        events = sim.apply(action)
        summary.append({"step": index, "action": action.kind, "events": list(events.tags),
                        "state": sim.state.as_dict()})
        last_kind = action.kind
        if events.off_workspace:
            break
    return summary
