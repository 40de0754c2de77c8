import numpy as np
import pytest

from mask_fixtures import bag_with_rim, ring_layer

from package_autobag.common import BACKGROUND, BAG, RIM, HANDLE, ConfigError
from package_autobag.segmask import SegMask
from package_autobag.segmenters import (NoisySegmenter, OracleSegmenter, SegmenterConfig, ThresholdSegmenter,
                                        make_segmenter)


def truth_mask(thickness=2.0):
    handle = np.zeros((60, 60), dtype=bool)
    handle[2:5, 28:33] = True
    return bag_with_rim(60, 60, (5, 5, 54, 54), ring_layer(60, 60, (30.0, 30.0), 15.0, thickness), handle)


def test_make_segmenter_dispatch():
    assert isinstance(make_segmenter(SegmenterConfig()), OracleSegmenter)
    assert isinstance(make_segmenter(SegmenterConfig(kind="noisy", p_drop=0.1)), NoisySegmenter)
    assert isinstance(make_segmenter(SegmenterConfig(kind="threshold")), ThresholdSegmenter)
    with pytest.raises(ConfigError):
        SegmenterConfig(kind="learned")
    with pytest.raises(ConfigError):
        SegmenterConfig(kind="noisy", p_flip=1.5)


def test_oracle_returns_ground_truth():
    truth = truth_mask()
    seg = OracleSegmenter()
    assert seg.segment(seg.prepare(truth)) == truth


def test_noisy_without_noise_is_identity():
    truth = truth_mask()
    assert NoisySegmenter().segment(truth) == truth


def test_noisy_drop_all_paint():
    truth = truth_mask()
    out = NoisySegmenter(p_drop=1.0).segment(truth)
    assert out.count(RIM) == 0 and out.count(HANDLE) == 0
    assert np.array_equal(out.foreground(), truth.foreground())


def test_noisy_flip_turns_bag_border_into_rim():
    truth = truth_mask()
    out = NoisySegmenter(p_flip=1.0).segment(truth)
    assert np.array_equal(out.foreground(), truth.foreground())
    # bag border rows and columns touch the background
    assert (out.labels[5, 10:25] == RIM).all()
    assert (out.labels[6:50, 54] == RIM).all()
    # interior untouched
    assert out.labels[30, 30] == BAG


def test_noisy_erosion_thins_rim():
    truth = truth_mask(thickness=4.0)
    out = NoisySegmenter(erosion_r=1).segment(truth)
    assert 0 < out.count(RIM) < truth.count(RIM)
    assert out.count(BAG) == truth.count(BAG) + truth.count(RIM) - out.count(RIM)


def test_noisy_is_seeded():
    truth = truth_mask()
    seg = NoisySegmenter(p_drop=0.3, p_flip=0.3, seed=7)
    assert seg.segment(truth) == seg.segment(truth)
    other = NoisySegmenter(p_drop=0.3, p_flip=0.3, seed=8).segment(truth)
    assert other != seg.segment(truth)
    drawn = seg.segment(truth, np.random.default_rng(1))
    assert drawn == seg.segment(truth, np.random.default_rng(1))


def test_threshold_segmenter_recovers_truth():
    truth = truth_mask()
    seg = ThresholdSegmenter(dilation_radius=0)
    out = seg.segment(seg.prepare(truth))
    assert np.array_equal(out.labels, truth.labels)


def test_threshold_segmenter_dilates_paint():
    truth = truth_mask()
    seg = ThresholdSegmenter()
    out = seg.segment(seg.prepare(truth))
    assert out.count(RIM) > truth.count(RIM)
    assert out.count(HANDLE) > truth.count(HANDLE)
    assert out.labels[30, 30] == BAG
    assert out.labels[0, 0] == BACKGROUND


def test_segment_keeps_shape():
    truth = SegMask(np.zeros((7, 9), dtype=np.uint8))
    for seg in (OracleSegmenter(), NoisySegmenter(p_flip=1.0), ThresholdSegmenter()):
        assert seg.segment(seg.prepare(truth)).shape == (7, 9)
