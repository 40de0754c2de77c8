#! /usr/bin/env python3
"""
Trial orchestration: run one seeded trial end to end, classify how it failed, and run a cell of trials.

A trial renders the simulated bag, segments it, lets the policy decide, and applies the decision until the
policy hands over to insertion or the action budget runs out; then objects are placed and the bag is lifted.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from package_autobag.common import (INSERTION, VARIANTS, FAILURE_BUDGET, FAILURE_OFF_WORKSPACE, FAILURE_MISPLACED,
                                    FAILURE_FELL_OUT, FAILURE_LIFT_SLIP, FAILURE_NONE, ClosedOpening, ConfigError,
                                    EmptyBagMask, InvalidTier, StateOutOfWorkspace, StepBudgetExhausted)
from package_autobag import primitives
from package_autobag.config import RunConfig, dump_config
from package_autobag.policy.common_policy import AdvanceStage
from package_autobag.policy.main_policy import Policy
from package_autobag.segmenters import make_segmenter
from package_autobag.sim import common_sim
from package_autobag.sim.common_sim import SimRandom
from package_autobag.sim.main_sim import SimHandle
from package_autobag.sim.sim_step import TIERS
from package_autobag.trial_log import TrialLogWriter, TrialRecord

log = logging.getLogger(__name__)

# Uncounted decisions (Recenter, stage changes) per counted action before a trial is cut off
LOOP_GUARD_FACTOR = 3
LOOP_GUARD_SLACK = 10


def trial_id(tier: int, variant: str, index: int) -> str:
    return f"t{tier}-{variant}-{index:03d}"


def _decision_dict(decision) -> dict:
    if isinstance(decision, AdvanceStage):
        return {"kind": decision.kind, "params": {"stage": decision.stage, "reason": decision.reason}}
    return primitives.to_dict(decision)


def _round_point(point) -> list:
    return [round(float(c), 4) for c in point]


class _Recorder:
    """Keeps the in-memory record and the append-only log file in step."""

    def __init__(self, record: TrialRecord, writer: Optional[TrialLogWriter]) -> None:
        self.record = record
        self.writer = writer
        if writer is not None:
            writer.write(record.header())

    def step(self, entry: dict) -> None:
        self.record.steps.append(entry)
        if self.writer is not None:
            self.writer.write(dict(entry, record="step"))

    def close(self) -> None:
        if self.writer is not None:
            self.writer.write(self.record.closing())


def run_trial(tier: int, variant: str, seed: int, cfg: RunConfig = None, log_path=None,
              record_id: str = None) -> TrialRecord:
    """
    One end-to-end trial. In-trial anomalies end the trial and show up in the outcome, only configuration
    problems raise.
    :param tier: 1, 2 or 3
    :param variant: one of VARIANTS
    :param seed: trial seed; every random branch derives from it
    :param cfg: RunConfig
    :param log_path: when given, the trial log is appended there line by line
    :param record_id: trial id, derived from tier, variant and seed when None
    :return: TrialRecord with outcome and failure_class
    """
    cfg = cfg if cfg is not None else RunConfig()
    if tier not in TIERS:
        raise InvalidTier(f"tier must be one of {TIERS}, got {tier}")
    if variant not in VARIANTS:
        raise ConfigError(f"variant must be one of {', '.join(VARIANTS)}, got '{variant}'")

    record = TrialRecord(trial_id=record_id or trial_id(tier, variant, seed), tier=tier, variant=variant,
                         seed=int(seed), n_objects=cfg.run.n_objects)
    if log_path is None:
        return _run(record, cfg, None)
    with TrialLogWriter(log_path) as writer:
        return _run(record, cfg, writer)


def _run(record: TrialRecord, cfg: RunConfig, writer: Optional[TrialLogWriter]) -> TrialRecord:
    rec = _Recorder(record, writer)
    scene = cfg.scene()
    ctx = cfg.policy_context(record.variant)
    root = SimRandom(record.seed, deterministic=cfg.sim.deterministic)
    segmenter = make_segmenter(cfg.segmenter, cfg.ranges.label_ranges())
    seg_rng = np.random.default_rng([cfg.segmenter.seed, record.seed])
    policy = Policy(record.variant, ctx, scene.calibration)
    notes = record.notes

    sim = SimHandle.start(record.tier, cfg.sim, root, scene, cfg.run.n_objects)
    ps = policy.start()
    exhausted = off_workspace = opened = False
    obs = None
    guard = LOOP_GUARD_FACTOR * (ctx.budget + 1) + LOOP_GUARD_SLACK

    index = 0
    while True:
        if index >= guard:
            notes.append(f"stopped after {index} decisions without reaching insertion")
            exhausted = True
            break
        try:
            obs = policy.observe(segmenter.segment(segmenter.prepare(sim.render()), seg_rng))
        except StateOutOfWorkspace as e:
            notes.append(f"step {index}: {e}")
            off_workspace = True
            break
        stage = ps.stage
        try:
            decision, ps = policy.step(obs, ps, root.child("policy", index), notes)
        except StepBudgetExhausted as e:
            log.info(f"{record.trial_id}: {e}")
            exhausted = True
            break
        except EmptyBagMask as e:
            notes.append(f"step {index}: {e}")
            off_workspace = True
            break

        entry = {"step_index": index, "stage": stage, "rule": ps.last_rule, "observation": obs.as_dict(),
                 "action": _decision_dict(decision), "steps_used": ps.steps_used, "events": []}
        if isinstance(decision, AdvanceStage):
            rec.step(entry)
            if decision.stage == INSERTION:
                opened = True
                break
        else:
            events = sim.apply(decision)
            entry["events"] = list(events.tags)
            entry["state"] = sim.state.as_dict()
            rec.step(entry)
            if events.off_workspace:
                off_workspace = True
                break
        index += 1

    n_placed = n_contained = 0
    if opened:
        insertion = {"placements": [], "pinpulls": [], "lift_events": [], "lifted": False, "closed_opening": False}
        try:
            result = policy.insert(obs, cfg.run.n_objects, sim, notes)
            insertion.update(placements=result.placements, pinpulls=result.pinpulls,
                             lift_events=result.lift_events, lifted=result.lifted)
            n_placed, n_contained = result.n_placed, result.n_contained
            if any(common_sim.EV_OFF_WORKSPACE in p["events"] for p in result.pinpulls):
                off_workspace = True
        except ClosedOpening as e:
            notes.append(f"insertion: {e}")
            insertion["closed_opening"] = True
        except (EmptyBagMask, StateOutOfWorkspace) as e:
            notes.append(f"insertion: {e}")
            off_workspace = True
        record.insertion = insertion

    record.outcome = {
        "opened_bag": opened,
        "n_placed": n_placed,
        "n_contained": n_contained,
        "success_n1": n_contained >= 1,
        "success_n2": n_contained >= 2,
        "budget_exhausted": exhausted,
        "off_workspace": off_workspace,
    }
    record.failure_class = classify_failure(record)
    rec.close()
    log.info(f"{record.trial_id}: opened={opened} placed={n_placed} contained={n_contained} "
             f"failure={record.failure_class}")
    return record


def _all_events(record: TrialRecord) -> List[str]:
    tags = [tag for s in record.steps for tag in s.get("events", [])]
    ins = record.insertion or {}
    for group in ("placements", "pinpulls"):
        for entry in ins.get(group, []):
            tags.extend(entry.get("events", []))
    tags.extend(ins.get("lift_events", []))
    return tags


def classify_failure(record: TrialRecord) -> str:
    """
    Precedence: B (bag left the workspace) > A (budget exhausted) > C (an object missed the opening)
    > E (lift slipped) > D (objects fell out of a lifted bag) > none.
    """
    outcome = record.outcome or {}
    ins = record.insertion or {}
    events = _all_events(record)
    if outcome.get("off_workspace") or common_sim.EV_OFF_WORKSPACE in events:
        return FAILURE_OFF_WORKSPACE
    if outcome.get("budget_exhausted") or not outcome.get("opened_bag", False):
        return FAILURE_BUDGET
    n_placed = outcome.get("n_placed", 0)
    if ins.get("closed_opening") or n_placed < record.n_objects or common_sim.EV_PLACED_OUT in events:
        return FAILURE_MISPLACED
    lifted = ins.get("lifted", common_sim.EV_LIFTED in events)
    if common_sim.EV_LIFT_SLIP in events and not lifted:
        return FAILURE_LIFT_SLIP
    if lifted and n_placed > outcome.get("n_contained", 0):
        return FAILURE_FELL_OUT
    return FAILURE_NONE


def _run_indexed(job: Tuple[int, str, int, int, RunConfig, Optional[str]]) -> TrialRecord:
    tier, variant, index, seed, cfg, out_dir = job
    tid = trial_id(tier, variant, index)
    log_path = None if out_dir is None else Path(out_dir) / f"{tid}.jsonl"
    return run_trial(tier, variant, seed, cfg, log_path, record_id=tid)


def run_trials(cfg: RunConfig, tier: int = None, variant: str = None, trials: int = None, seed: int = None,
               out_dir=None, workers: int = None) -> List[TrialRecord]:
    """
    A cell of trials; trial i gets seed base + i. Results are sorted by trial_id and do not depend on the
    number of workers.
    :param out_dir: when given, each trial writes <trial_id>.jsonl and the effective config is saved
    """
    tier = tier if tier is not None else cfg.run.tier
    variant = variant if variant is not None else cfg.policy.variant
    trials = trials if trials is not None else cfg.run.trials
    seed = seed if seed is not None else cfg.run.seed
    workers = workers if workers is not None else cfg.run.workers
    if tier not in TIERS:
        raise InvalidTier(f"tier must be one of {TIERS}, got {tier}")
    if variant not in VARIANTS:
        raise ConfigError(f"variant must be one of {', '.join(VARIANTS)}, got '{variant}'")

    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        (Path(out_dir) / "config.conf").write_text(dump_config(cfg), encoding="utf-8")
    jobs = [(tier, variant, i, seed + i, cfg, None if out_dir is None else str(out_dir)) for i in range(trials)]

    log.info(f"running {trials} trials, tier {tier}, variant {variant}, seeds {seed}..{seed + trials - 1}")
    if workers <= 1:
        records = [_run_indexed(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_indexed, jobs))
    return sorted(records, key=lambda r: r.trial_id)
