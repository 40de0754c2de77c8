import json

import numpy as np
import pytest

from package_autobag import dataset, perception
from package_autobag.common import OPENING_DIRS, MaskFormatError
from package_autobag.config import RunConfig
from package_autobag.segmask import read_mask
from package_autobag.sim.common_sim import SimRandom


def test_small_dataset_files_and_split(tmp_path):
    manifest = dataset.collect_dataset(RunConfig(), 10, seed=3, out_dir=tmp_path)
    assert (manifest["n_images"], manifest["n_train"], manifest["n_val"]) == (10, 8, 2)
    for sub in ("masks", "regular", "uv"):
        assert len(list((tmp_path / sub).glob("*.png"))) == 10
    entry = manifest["entries"][0]
    mask = read_mask(tmp_path / entry["mask"])
    uv = perception.read_image(tmp_path / entry["uv"])
    assert uv.shape == mask.shape + (3,)
    assert [e["index"] for e in manifest["entries"]] == list(range(10))
    assert json.loads((tmp_path / "manifest.json").read_text(encoding="utf-8")) == manifest
    dataset.validate_manifest(manifest)


def test_manifest_is_reproducible(tmp_path):
    dataset.collect_dataset(RunConfig(), 12, seed=5, out_dir=tmp_path / "a", write_images=False)
    dataset.collect_dataset(RunConfig(), 12, seed=5, out_dir=tmp_path / "b", write_images=False)
    first = (tmp_path / "a" / "manifest.json").read_bytes()
    assert first == (tmp_path / "b" / "manifest.json").read_bytes()
    assert not (tmp_path / "a" / "masks").exists()
    other = dataset.collect_dataset(RunConfig(), 12, seed=6)
    assert other["entries"] != json.loads(first)["entries"]


def test_split_labels():
    labels = dataset.split_labels(10, SimRandom(0))
    assert labels.count("train") == 8 and labels.count("val") == 2
    assert labels == dataset.split_labels(10, SimRandom(0))
    assert dataset.split_labels(0, SimRandom(0)) == []


def test_diversity_counts():
    states = [{"s": 0.05, "a": 0.0, "dir": "up"}, {"s": 0.95, "a": 0.5, "dir": "down"},
              {"s": 0.55, "a": 1.0, "dir": "up"}]
    div = dataset.diversity(states)
    assert div["opening_dir"] == {"up": 2, "down": 1, "sideways": 0}
    assert sum(div["s"]["counts"]) == 3
    assert div["s"]["counts"][0] == 1 and div["s"]["counts"][-1] == 1
    assert div["a"]["max"] == 1.0


def test_invalid_requests():
    with pytest.raises(ValueError):
        dataset.collect_dataset(RunConfig(), -1, seed=0)
    with pytest.raises(MaskFormatError):
        dataset.validate_manifest({"seed": 0})


@pytest.mark.slow
def test_full_dataset_split_and_diversity():
    manifest = dataset.collect_dataset(RunConfig(), 500, seed=0)
    assert (manifest["n_train"], manifest["n_val"]) == (400, 100)
    div = manifest["diversity"]
    assert all(div["opening_dir"][d] > 0 for d in OPENING_DIRS)
    s_values = np.array([e["state"]["s"] for e in manifest["entries"]])
    assert s_values.max() - s_values.min() > 0.4
    assert sum(1 for c in div["s"]["counts"] if c > 0) >= 4
