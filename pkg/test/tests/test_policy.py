import math
from dataclasses import replace
from itertools import product

import pytest

from mask_fixtures import ALIGNED, CTX, WS, observation

from package_autobag import primitives
from package_autobag.common import (STAGE1, STAGE2, INSERTION, AUTOBAG, AB_A, AB_E, AUTOBAG_C, AUTOBAG_D,
                                    ConfigError, EmptyBagMask, StepBudgetExhausted)
from package_autobag.policy.common_policy import AdvanceStage, PolicyState, PolicyThresholds
from package_autobag.policy.policy_autobag import autobag_step
from package_autobag.sim.common_sim import SimRandom

AREAS = (0.14, 0.15, 0.16, 0.44, 0.45, 0.46)
ELONGATIONS = (2.87, 2.88, 2.89, 4.4, 4.5, 4.6)
BAG_FRACTIONS = (0.54, 0.55, 0.56)


def stage1_golden(a_ch, e_ch, bag_fraction):
    if a_ch > 0.15 and e_ch < 4.5:
        return "initial-opening"
    if bag_fraction < 0.55:
        return "small-area-shake-boundary"
    return "large-area-compress"


@pytest.mark.parametrize("a_ch, e_ch, bag_fraction", list(product(AREAS, ELONGATIONS, BAG_FRACTIONS)))
def test_stage1_threshold_table(a_ch, e_ch, bag_fraction):
    decision, ps = autobag_step(observation(a_ch, e_ch, bag_fraction), PolicyState(), ctx=CTX, rng=SimRandom(0))
    expected = stage1_golden(a_ch, e_ch, bag_fraction)
    assert ps.last_rule == expected
    assert ps.initial_check_done
    if expected == "initial-opening":
        assert decision == AdvanceStage(STAGE2, "initial-opening")
        assert ps.stage == STAGE2 and ps.steps_used == 0
    else:
        assert decision.kind == (primitives.SHAKE if bag_fraction < 0.55 else primitives.COMPRESS)
        assert ps.stage == STAGE1 and ps.steps_used == 1


@pytest.mark.parametrize("a_ch, e_ch", list(product(AREAS, ELONGATIONS)))
def test_stage2_threshold_table(a_ch, e_ch):
    ps = PolicyState(stage=STAGE2, initial_check_done=True)
    decision, ps = autobag_step(observation(a_ch, e_ch), ps, ctx=CTX)
    if a_ch >= 0.45 and e_ch <= 2.88:
        assert decision == AdvanceStage(INSERTION, "opening-ready")
    else:
        assert ps.last_rule == "dilate-center"
        assert decision.kind == primitives.DILATE
        assert decision.y_l == decision.y_r
        assert decision.x_l < decision.x_r


def test_ablations_check_one_metric():
    th = PolicyThresholds()
    assert th.stage1_exit(observation(0.14, 2.87).metrics, AB_A)
    assert not th.stage1_exit(observation(0.14, 2.87).metrics, AUTOBAG)
    assert th.stage2_exit(observation(0.46, 4.6).metrics, AB_E)
    assert not th.stage2_exit(observation(0.46, 4.6).metrics, AUTOBAG)
    assert not th.stage2_exit(observation(0.44, 2.0).metrics, AB_E)


def test_compress_targets_bottom_then_flip():
    rng = SimRandom(0)
    obs = observation(0.05, 8.0)
    compress, ps = autobag_step(obs, PolicyState(), ctx=CTX, rng=rng)
    assert compress.kind == primitives.COMPRESS
    assert compress.y > 10.0            # rim on top rows, bottom at the far end
    flip, ps = autobag_step(obs, ps, ctx=CTX, rng=rng)
    assert ps.last_rule == "compress-then-flip"
    assert (flip.x_l, flip.x_r) == (WS.to_cm(20, 44)[0], WS.to_cm(49, 44)[0])
    decision, ps = autobag_step(observation(0.3, 3.0), ps, ctx=CTX, rng=rng)
    assert decision == AdvanceStage(STAGE2, "flip-opened")
    assert ps.steps_used == 2


def test_failed_flip_shakes():
    ps = PolicyState(initial_check_done=True, last_action_kind=primitives.FLIP, steps_used=2)
    decision, ps = autobag_step(observation(0.1, 6.0), ps, ctx=CTX, rng=SimRandom(1))
    assert decision.kind == primitives.SHAKE
    assert ps.last_rule == "flip-failed-shake-boundary"


def test_variant_branches():
    decision, ps = autobag_step(observation(0.05, 8.0), PolicyState(variant=AUTOBAG_C), ctx=CTX)
    assert decision.kind == primitives.FLIP and ps.last_rule == "large-area-flip"
    ps = PolicyState(stage=STAGE2, variant=AUTOBAG_D, initial_check_done=True)
    decision, _ = autobag_step(observation(0.1, 8.0), ps, ctx=CTX)
    assert decision == AdvanceStage(INSERTION, "skip-dilate")


def test_stage2_rotates_misaligned_minor_axis():
    angle = math.radians(30)
    frame = replace(ALIGNED, minor_dir=(math.cos(angle), math.sin(angle)),
                    major_dir=(-math.sin(angle), math.cos(angle)))
    ps = PolicyState(stage=STAGE2, initial_check_done=True)
    decision, ps = autobag_step(observation(0.2, 4.0, frame=frame), ps, ctx=CTX)
    assert decision.kind == primitives.ROTATE
    assert decision.gamma == pytest.approx(-angle)
    assert ps.last_rule == "align-minor-axis"


def test_stage2_without_opening_dilates_bag_center():
    ps = PolicyState(stage=STAGE2, initial_check_done=True)
    decision, ps = autobag_step(observation(0.0, 100.0, frame=None), ps, ctx=CTX)
    assert ps.last_rule == "no-opening-dilate-bag-center"
    assert (decision.x_l + decision.x_r) / 2 == pytest.approx(0.0, abs=1e-9)


def test_off_center_bag_is_recentered_without_budget():
    ps = PolicyState(steps_used=3, last_action_kind=primitives.SHAKE)
    decision, after = autobag_step(observation(0.3, 3.0, shift_x=21), ps, ctx=CTX)
    assert decision.kind == primitives.RECENTER
    assert decision.x == pytest.approx(10.5)
    assert after.steps_used == 3 and after.last_action_kind == primitives.SHAKE
    assert not after.initial_check_done


def test_budget_exhaustion():
    ctx = replace(CTX, budget=2)
    ps = PolicyState(steps_used=2, initial_check_done=True)
    with pytest.raises(StepBudgetExhausted):
        autobag_step(observation(0.05, 8.0), ps, ctx=ctx, rng=SimRandom(0))
    decision, _ = autobag_step(observation(0.3, 3.0), PolicyState(steps_used=2), ctx=ctx)
    assert isinstance(decision, AdvanceStage)


def test_empty_bag_and_wrong_stage():
    obs = replace(observation(0.3, 3.0), bag_centroid=None)
    with pytest.raises(EmptyBagMask):
        autobag_step(obs, PolicyState(), ctx=CTX)
    with pytest.raises(ValueError):
        autobag_step(observation(0.3, 3.0), PolicyState(stage=INSERTION), ctx=CTX)


@pytest.mark.parametrize("values", [
    {"A1": 0.5, "A2": 0.4},
    {"E1": 2.0, "E2": 2.88},
    {"E2": 0.9},
    {"S1": 0.0},
])
def test_threshold_validation(values):
    with pytest.raises(ConfigError):
        PolicyThresholds(**values)
