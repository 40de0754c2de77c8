#! /usr/bin/env python3
"""
This module should only ever be called by the harness and the CLI: it binds a variant to the decision functions.
"""

from package_autobag.common import STAGE1, AB_P
from package_autobag.perception import BagCalibration
from package_autobag.segmask import SegMask
from package_autobag.policy import policy_autobag, policy_collect, policy_insertion
from package_autobag.policy.common_policy import Observation, PolicyContext, PolicyState, observe


class Policy:
    """
    :param variant: one of VARIANTS
    :param ctx: PolicyContext
    :param cal: BagCalibration used to build observations
    """
    def __init__(self, variant: str, ctx: PolicyContext, cal: BagCalibration) -> None:
        self.variant = variant
        self.ctx = ctx
        self.cal = cal

    def start(self) -> PolicyState:
        return PolicyState(stage=STAGE1, variant=self.variant)

    def observe(self, mask: SegMask) -> Observation:
        return observe(mask, self.cal, self.ctx.settings.handle_min_px, with_bag_metrics=self.variant == AB_P)

    def step(self, obs: Observation, ps: PolicyState, rng=None, notes: list = None):
        return policy_autobag.autobag_step(obs, ps, self.ctx.thresholds, self.ctx, rng, notes)

    def collect(self, obs: Observation, last_kind, rng):
        return policy_collect.collect_policy(obs, last_kind, rng, self.ctx)

    def insert(self, obs: Observation, n_objects: int, sim, notes: list = None):
        return policy_insertion.run_insertion(obs, n_objects, sim, self.ctx, self.variant, notes)
