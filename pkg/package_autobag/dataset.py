#! /usr/bin/env python3
"""
Segmentation data collection: drive the simulated bag with the data-collection policy and save, for every
frame, the regular-light image, the UV image and the ground-truth mask, plus a manifest with an 80/20
train/validation split and diversity statistics of the states visited.
"""

import logging
from pathlib import Path
from typing import Dict, List

import numpy as np
from jsonschema import Draft7Validator

from package_autobag.common import AUTOBAG, OPENING_DIRS, MaskFormatError, StateOutOfWorkspace, dump_json
from package_autobag import perception
from package_autobag.config import RunConfig
from package_autobag.policy.main_policy import Policy
from package_autobag.segmask import write_mask
from package_autobag.sim.common_sim import SimRandom
from package_autobag.sim.main_sim import SimHandle
from package_autobag.sim.sim_step import TIERS

log = logging.getLogger(__name__)

TRAIN_FRACTION = 0.8
EPISODE_LENGTH = 10
HISTOGRAM_BINS = 10

MANIFEST_SCHEMA = {
    "type": "object",
    "required": ["seed", "n_images", "n_train", "n_val", "entries", "diversity"],
    "properties": {
        "seed": {"type": "integer"},
        "n_images": {"type": "integer", "minimum": 0},
        "n_train": {"type": "integer", "minimum": 0},
        "n_val": {"type": "integer", "minimum": 0},
        "entries": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["index", "split", "episode", "step", "state", "mask"],
                "properties": {
                    "index": {"type": "integer"},
                    "split": {"enum": ["train", "val"]},
                    "episode": {"type": "integer"},
                    "step": {"type": "integer"},
                    "state": {"type": "object"},
                    "mask": {"type": "string"},
                    "regular": {"type": "string"},
                    "uv": {"type": "string"},
                    "rule": {"type": "string"},
                },
            },
        },
        "diversity": {
            "type": "object",
            "required": ["s", "opening_dir", "a"],
            "properties": {
                "s": {"type": "object"},
                "opening_dir": {"type": "object"},
                "a": {"type": "object"},
            },
        },
    },
}

MANIFEST_VALIDATOR = Draft7Validator(MANIFEST_SCHEMA)


def _histogram(values: List[float]) -> dict:
    counts, edges = np.histogram(np.asarray(values, dtype=float), bins=HISTOGRAM_BINS, range=(0.0, 1.0))
    return {"edges": [round(float(e), 4) for e in edges], "counts": [int(c) for c in counts],
            "min": round(float(min(values)), 6) if values else None,
            "max": round(float(max(values)), 6) if values else None}


def diversity(states: List[dict]) -> dict:
    return {
        "s": _histogram([st["s"] for st in states]),
        "a": _histogram([st["a"] for st in states]),
        "opening_dir": {d: sum(1 for st in states if st["dir"] == d) for d in OPENING_DIRS},
    }


def split_labels(n: int, rng: SimRandom) -> List[str]:
    """int(0.8 n) train entries chosen by a seeded permutation, the rest validation."""
    n_train = int(TRAIN_FRACTION * n)
    train = set(rng.generator.permutation(n)[:n_train].tolist())
    return ["train" if i in train else "val" for i in range(n)]


def validate_manifest(manifest: dict) -> None:
    errors = sorted(MANIFEST_VALIDATOR.iter_errors(manifest), key=lambda e: list(e.path))
    if errors:
        raise MaskFormatError(f"invalid dataset manifest: {errors[0].message}")


def collect_dataset(cfg: RunConfig, n_images: int, seed: int, out_dir=None, write_images: bool = True,
                    notes: list = None) -> Dict:
    """
    :param cfg: RunConfig; the sim section sets the dynamics, the policy section the collection thresholds
    :param n_images: number of frames to keep
    :param seed: root seed of the collection run
    :param out_dir: directory for images and manifest.json; nothing is written when None
    :param write_images: when False only the manifest is written
    :return: manifest dict
    """
    if n_images < 0:
        raise ValueError(f"n_images must be >= 0, got {n_images}")
    scene = cfg.scene()
    policy = Policy(AUTOBAG, cfg.policy_context(), scene.calibration)
    root = SimRandom(seed, deterministic=cfg.sim.deterministic)
    out = Path(out_dir) if out_dir is not None else None
    if out is not None and write_images:
        for sub in ("masks", "regular", "uv"):
            (out / sub).mkdir(parents=True, exist_ok=True)

    entries: List[dict] = []
    episode = 0
    while len(entries) < n_images:
        tier = TIERS[episode % len(TIERS)]
        ep_rng = root.child("episode", episode)
        sim = SimHandle.start(tier, cfg.sim, ep_rng, scene, cfg.run.n_objects)
        last_kind = None
        for step_index in range(EPISODE_LENGTH):
            if len(entries) >= n_images:
                break
            try:
                truth = sim.render()
            except StateOutOfWorkspace as e:
                if notes is not None:
                    notes.append(f"episode {episode} step {step_index}: {e}")
                break
            index = len(entries)
            entry = {"index": index, "episode": episode, "step": step_index, "tier": tier,
                     "state": sim.state.as_dict(), "mask": f"masks/{index:05d}.png"}
            if out is not None and write_images:
                regular, uv = perception.render_pair(truth)
                write_mask(truth, out / entry["mask"])
                entry["regular"] = f"regular/{index:05d}.png"
                entry["uv"] = f"uv/{index:05d}.png"
                perception.write_image(regular, out / entry["regular"])
                perception.write_image(uv, out / entry["uv"])
            action, rule = policy.collect(policy.observe(truth), last_kind, ep_rng.child("policy", step_index))
            entry["rule"] = rule
            entries.append(entry)
            events = sim.apply(action)
            last_kind = action.kind
            if events.off_workspace:
                break
        episode += 1

    for entry, split in zip(entries, split_labels(len(entries), root.child("split"))):
        entry["split"] = split
    manifest = {
        "seed": int(seed),
        "n_images": len(entries),
        "n_train": sum(1 for e in entries if e["split"] == "train"),
        "n_val": sum(1 for e in entries if e["split"] == "val"),
        "episodes": episode,
        "entries": entries,
        "diversity": diversity([e["state"] for e in entries]),
    }
    validate_manifest(manifest)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "manifest.json").write_text(dump_json(manifest) + "\n", encoding="utf-8")
    log.info(f"collected {len(entries)} frames over {episode} episodes")
    return manifest
