import math
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from package_autobag import harness, primitives
from package_autobag.common import (AUTOBAG, AB_P, AB_A, AB_E, INSERTION, ConfigError, InvalidTier,
                                    FAILURE_BUDGET, FAILURE_OFF_WORKSPACE, FAILURE_MISPLACED, FAILURE_FELL_OUT,
                                    FAILURE_LIFT_SLIP, FAILURE_NONE)
from package_autobag.config import RunConfig, load_config
from package_autobag.sim import common_sim
from package_autobag.trial_log import TrialRecord, read_trial_log

CONFIG_DIR = Path(__file__).resolve().parents[2] / "config"


@pytest.fixture(scope="module")
def deterministic():
    return load_config(CONFIG_DIR / "deterministic.conf")


def counted_actions(record):
    return record.steps[-1]["steps_used"]


def test_deterministic_tier1_opens_and_contains(deterministic):
    bound = math.ceil((0.45 - 0.1) / deterministic.sim.dilate_delta_a) + 3
    for seed in range(6):
        record = harness.run_trial(1, AUTOBAG, seed, deterministic)
        assert record.failure_class == FAILURE_NONE, record.notes
        assert record.outcome["opened_bag"]
        assert record.outcome["n_placed"] == 2 and record.outcome["n_contained"] == 2
        assert counted_actions(record) <= bound
        assert record.steps[-1]["action"]["params"]["stage"] == INSERTION


def test_deterministic_tier2_compress_flip(deterministic):
    for seed in range(6):
        record = harness.run_trial(2, AUTOBAG, seed, deterministic)
        assert record.outcome["opened_bag"], record.notes
        kinds = [s["action"]["kind"] for s in record.steps]
        first = kinds.index(primitives.COMPRESS)
        assert kinds[first + 1] == primitives.FLIP
        assert counted_actions(record) <= 15


def test_zero_budget_is_class_a(deterministic):
    cfg = replace(deterministic, run=replace(deterministic.run, max_steps=0))
    record = harness.run_trial(1, AUTOBAG, 0, cfg)
    assert record.failure_class == FAILURE_BUDGET
    assert record.outcome["budget_exhausted"] and not record.outcome["opened_bag"]
    assert record.insertion is None


def test_run_trial_rejects_bad_arguments():
    with pytest.raises(InvalidTier):
        harness.run_trial(4, AUTOBAG, 0)
    with pytest.raises(ConfigError):
        harness.run_trial(1, "autobag-x", 0)
    with pytest.raises(InvalidTier):
        harness.run_trials(RunConfig(), tier=0)


def test_trial_log_matches_record(tmp_path, deterministic):
    path = tmp_path / "t1.jsonl"
    record = harness.run_trial(1, AUTOBAG, 3, deterministic, log_path=path, record_id="t1-autobag-003")
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines == record.lines()
    back = read_trial_log(path)
    assert back.trial_id == "t1-autobag-003"
    assert back.outcome == record.outcome
    assert back.steps == record.steps


def _tree_bytes(directory):
    return {p.name: p.read_bytes() for p in sorted(Path(directory).iterdir())}


def test_reruns_are_byte_identical(tmp_path):
    cfg = RunConfig()
    harness.run_trials(cfg, tier=1, variant=AUTOBAG, trials=3, seed=40, out_dir=tmp_path / "a")
    harness.run_trials(cfg, tier=1, variant=AUTOBAG, trials=3, seed=40, out_dir=tmp_path / "b")
    first = _tree_bytes(tmp_path / "a")
    assert set(first) == {"config.conf", "t1-autobag-000.jsonl", "t1-autobag-001.jsonl", "t1-autobag-002.jsonl"}
    assert first == _tree_bytes(tmp_path / "b")


def test_worker_count_does_not_change_results():
    cfg = RunConfig()
    serial = harness.run_trials(cfg, tier=2, variant=AUTOBAG, trials=4, seed=7, workers=1)
    parallel = harness.run_trials(cfg, tier=2, variant=AUTOBAG, trials=4, seed=7, workers=2)
    assert [r.trial_id for r in serial] == [f"t2-autobag-{i:03d}" for i in range(4)]
    assert [r.lines() for r in serial] == [r.lines() for r in parallel]


def classified(opened=True, n_placed=2, n_contained=2, exhausted=False, off=False, lifted=True, lift_events=None,
               placement_events=None, closed=False):
    record = TrialRecord(trial_id="t1-autobag-000", tier=1, variant=AUTOBAG, seed=0)
    record.outcome = {"opened_bag": opened, "n_placed": n_placed, "n_contained": n_contained,
                      "success_n1": n_contained >= 1, "success_n2": n_contained >= 2,
                      "budget_exhausted": exhausted, "off_workspace": off}
    if opened:
        placements = [{"object": i, "point": [0.0, 0.0], "events": [e]}
                      for i, e in enumerate(placement_events or [common_sim.EV_PLACED_IN] * 2)]
        record.insertion = {"placements": placements, "pinpulls": [], "closed_opening": closed, "lifted": lifted,
                            "lift_events": lift_events if lift_events is not None else [common_sim.EV_LIFTED]}
    return harness.classify_failure(record)


def test_failure_classes():
    assert classified() == FAILURE_NONE
    assert classified(opened=False, n_placed=0, n_contained=0, exhausted=True) == FAILURE_BUDGET
    assert classified(opened=False, n_placed=0, n_contained=0, off=True) == FAILURE_OFF_WORKSPACE
    assert classified(n_placed=1, n_contained=1,
                      placement_events=[common_sim.EV_PLACED_IN, common_sim.EV_PLACED_OUT]) == FAILURE_MISPLACED
    assert classified(n_contained=0, lifted=False, lift_events=[common_sim.EV_LIFT_SLIP]) == FAILURE_LIFT_SLIP
    assert classified(n_contained=1, lift_events=[common_sim.EV_LIFTED, common_sim.EV_FELL_OUT]) == FAILURE_FELL_OUT
    assert classified(n_placed=0, n_contained=0, closed=True) == FAILURE_MISPLACED


@pytest.mark.parametrize("kwargs, expected", [
    ({"off": True, "exhausted": True, "opened": False, "n_placed": 0, "n_contained": 0}, FAILURE_OFF_WORKSPACE),
    ({"off": True, "n_placed": 1, "n_contained": 0, "lifted": False,
      "lift_events": [common_sim.EV_LIFT_SLIP]}, FAILURE_OFF_WORKSPACE),
    ({"exhausted": True, "opened": False, "n_placed": 0, "n_contained": 0}, FAILURE_BUDGET),
    ({"n_placed": 1, "n_contained": 0, "lifted": False, "lift_events": [common_sim.EV_LIFT_SLIP]}, FAILURE_MISPLACED),
    ({"n_placed": 1, "n_contained": 0, "lift_events": [common_sim.EV_LIFTED, common_sim.EV_FELL_OUT]},
     FAILURE_MISPLACED),
])
def test_failure_precedence(kwargs, expected):
    assert classified(**kwargs) == expected


@pytest.mark.slow
def test_ablations_do_not_beat_full_policy():
    cfg = RunConfig()
    trials = 200
    results = {}
    for variant in (AUTOBAG, AB_P, AB_A, AB_E):
        records = harness.run_trials(cfg, tier=1, variant=variant, trials=trials, seed=1000)
        contained = np.array([r.outcome["n_contained"] for r in records])
        results[variant] = (contained.mean(), float(np.mean(contained == 2)))
    for variant in (AB_P, AB_A, AB_E):
        assert results[AUTOBAG][0] >= results[variant][0], results
    assert results[AB_A][1] < results[AUTOBAG][1], results
