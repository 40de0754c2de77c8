from dataclasses import replace

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from mask_fixtures import CTX, bag_only, bag_with_rim, centered_mask, observation, ring_layer

from package_autobag import geometry, primitives
from package_autobag.common import BAG, RIM, HANDLE, ClosedOpening, EmptyBagMask, NoRim
from package_autobag.geometry import AxisFrame, Polygon
from package_autobag.perception import CLOSED_OPENING, BagCalibration, OpeningMetrics
from package_autobag.policy import policy_grasps
from package_autobag.policy.common_policy import observe
from package_autobag.policy.policy_insertion import insertion_plan, run_insertion
from package_autobag.segmask import SegMask
from package_autobag.sim import common_sim
from package_autobag.sim.common_sim import StepEvents

BOX = (20, 15, 49, 74)


def test_bottom_point_is_far_from_rim():
    x, y = policy_grasps.bottom_point(centered_mask())
    assert y == 74.0
    assert 33.0 <= x <= 36.0


def test_bottom_point_with_rim_on_the_side():
    labels = centered_mask().labels.copy()
    labels[labels == RIM] = BAG
    labels[15:75, 20:22] = RIM
    x, y = policy_grasps.bottom_point(SegMask(labels))
    assert x == 49.0
    assert 44.0 <= y <= 45.0


def test_bottom_point_needs_rim():
    with pytest.raises(NoRim):
        policy_grasps.bottom_point(bag_only(70, 90, BOX))


@pytest.mark.parametrize("handles, last_center, rule, row", [
    ([np.array([[34, 15], [35, 15]])], None, "no-rim-handles", 74.0),
    ([], (34.5, 74.0), "no-rim-last-center", 15.0),
    ([], None, "no-rim-camera-top", 74.0),
])
def test_bottom_point_fallback_order(handles, last_center, rule, row):
    notes = []
    (x, y), how = policy_grasps.bottom_point_with_fallback(bag_only(70, 90, BOX), handles, last_center, notes)
    assert how == rule
    assert y == row
    assert 20.0 <= x <= 49.0
    assert len(notes) == 1 and rule in notes[0]


def test_bottom_point_fallback_prefers_rim_and_rejects_empty():
    point, how = policy_grasps.bottom_point_with_fallback(centered_mask(), (), (34.5, 74.0))
    assert how == "rim" and point[1] == 74.0
    with pytest.raises(EmptyBagMask):
        policy_grasps.bottom_point_with_fallback(SegMask(np.zeros((10, 10), dtype=np.uint8)))


def test_pinpull_targets_without_handles():
    (pin1, pull1), (pin2, pull2) = policy_grasps.pinpull_targets(observation(0.5, 2.0))
    assert pin1 == pull2 == (49.0, 44.0)
    assert pull1 == pin2 == (20.0, 44.0)


def test_pinpull_targets_use_two_largest_handles():
    big = np.array([[x, y] for x in range(60, 66) for y in range(10, 15)])
    small = np.array([[x, y] for x in range(5, 10) for y in range(10, 15)])
    tiny = np.array([[30, 5], [31, 5], [32, 5]])
    obs = replace(observation(0.5, 2.0), handle_components=[tiny, big, small])
    (pin1, pull1), (pin2, pull2) = policy_grasps.pinpull_targets(obs)
    assert pull1 == pin2 == pytest.approx((7.0, 12.0))
    assert pin1 == pull2 == pytest.approx((62.5, 12.0))
    with pytest.raises(EmptyBagMask):
        policy_grasps.pinpull_targets(replace(obs, bag_centroid=None))


RECT = Polygon(((0.0, 0.0), (40.0, 0.0), (40.0, 10.0), (0.0, 10.0)))


def rect_metrics(frame=True):
    axis = AxisFrame(center=(20.0, 5.0), major_dir=(1.0, 0.0), minor_dir=(0.0, 1.0), major_len=11.5,
                     minor_len=2.9)
    return OpeningMetrics(a_ch=0.4, e_ch=4.0, hull=RECT, center=(20.0, 5.0), frame=axis if frame else None,
                          rim_pixel_count=100)


@pytest.mark.parametrize("n, xs", [(1, [20.0]), (2, [10.0, 30.0]), (3, [20.0 / 3, 20.0, 100.0 / 3])])
def test_insertion_plan_splits_along_major_axis(n, xs):
    points = insertion_plan(rect_metrics(), n)
    assert [p[0] for p in points] == pytest.approx(xs)
    assert all(p[1] == pytest.approx(5.0) for p in points)


def test_insertion_plan_without_frame_uses_hull_axes():
    points = sorted(insertion_plan(rect_metrics(frame=False), 2))
    assert [p[0] for p in points] == pytest.approx([10.0, 30.0])


def test_insertion_plan_rejects_closed_opening():
    with pytest.raises(ClosedOpening):
        insertion_plan(CLOSED_OPENING, 2)
    with pytest.raises(ValueError):
        insertion_plan(rect_metrics(), 0)


class RecordingSim:
    """Stands in for SimHandle: records every call, every placement lands in the opening."""

    def __init__(self, contained=2):
        self.state = self
        self.placed = []
        self.applied = []
        self.lift_points = None
        self.contained = contained

    def count(self, status):
        return len(self.placed) if status == common_sim.PLACED_IN_OPENING else 0

    def place(self, object_id, point):
        self.placed.append((object_id, point))
        return StepEvents([common_sim.EV_PLACED_IN])

    def apply(self, action):
        self.applied.append(action)
        return StepEvents()

    def lift(self, grasp_points):
        self.lift_points = list(grasp_points)
        return self.contained, StepEvents([common_sim.EV_LIFTED])


def opening_with_handles():
    handle = np.zeros((90, 70), dtype=bool)
    handle[16:20, 21:26] = True
    handle[16:20, 44:49] = True
    mask = bag_with_rim(70, 90, BOX, ring_layer(70, 90, (34.5, 30.0), 8.0), handle)
    return observe(mask, BagCalibration(max_hull_area=1000.0, max_bag_area=5000.0))


def test_run_insertion_places_pins_and_lifts():
    obs = opening_with_handles()
    assert len(obs.handle_components) == 2
    sim = RecordingSim()
    notes = []
    result = run_insertion(obs, 2, sim, CTX, notes=notes)

    assert [object_id for object_id, _ in sim.placed] == [0, 1]
    centers = [CTX.workspace.to_pixel(*point) for _, point in sim.placed]
    for cx, cy in centers:
        assert 2.0 <= np.hypot(cx - 34.5, cy - 30.0) <= 5.0
    mid = tuple(np.mean(centers, axis=0))
    assert mid == pytest.approx((34.5, 30.0), abs=0.5)

    assert [a.kind for a in sim.applied] == [primitives.PINPULL, primitives.PINPULL]
    first, second = sim.applied
    assert (first.x_pin, first.y_pin) == pytest.approx((5.75, -13.5))
    assert (first.x_pull, first.y_pull) == pytest.approx((-5.75, -13.5))
    assert (second.x_pin, second.x_pull) == pytest.approx((-5.75, 5.75))
    assert sim.lift_points == [pytest.approx((-5.75, -13.5)), pytest.approx((5.75, -13.5))]

    assert (result.n_placed, result.n_contained, result.lifted) == (2, 2, True)
    assert [p["events"] for p in result.placements] == [[common_sim.EV_PLACED_IN]] * 2
    assert len(result.pinpulls) == 2 and not notes


def test_run_insertion_without_opening():
    obs = observe(bag_only(70, 90, BOX), BagCalibration(max_hull_area=1000.0, max_bag_area=5000.0))
    with pytest.raises(ClosedOpening):
        run_insertion(obs, 2, RecordingSim(), CTX)


def rotate_quarter(labels, point):
    """np.rot90 of the labels and the matching map of an (x, y) pixel point."""
    width = labels.shape[1]
    return np.rot90(labels), (point[1], width - 1 - point[0])


@pytest.mark.parametrize("turns", [1, 2, 3])
def test_bottom_point_turns_with_the_mask(turns):
    labels = centered_mask().labels
    expected = policy_grasps.bottom_point(SegMask(labels))
    for _ in range(turns):
        labels, expected = rotate_quarter(labels, expected)
    x, y = policy_grasps.bottom_point(SegMask(labels))
    assert abs(x - expected[0]) <= 2.0 and abs(y - expected[1]) <= 2.0


def test_bottom_point_of_notched_bag_lands_on_the_bag():
    labels = centered_mask().labels.copy()
    labels[60:75, 30:40] = 0
    mask = SegMask(labels)
    x, y = policy_grasps.bottom_point(mask)
    assert mask.foreground()[int(y), int(x)]
    assert y == 59.0
    # bottom third of the bounding box
    assert y >= 15 + 2 * (74 - 15) / 3 - 1


def mirrored(point, width):
    return (width - 1 - point[0], point[1])


@pytest.mark.parametrize("with_handles", [True, False])
def test_pinpull_targets_mirror_with_the_mask(with_handles):
    labels = np.zeros((90, 70), dtype=np.uint8)
    labels[15:75, 12:52] = BAG
    labels[30:34, 25:40] = RIM
    if with_handles:
        labels[18:22, 14:20] = HANDLE
        labels[18:24, 44:50] = HANDLE
    cal = BagCalibration(max_hull_area=1000.0, max_bag_area=5000.0)
    obs = observe(SegMask(labels), cal)
    flipped = observe(SegMask(np.fliplr(labels).copy()), cal)
    assert len(obs.handle_components) == (2 if with_handles else 0)

    (pin1, pull1), (pin2, pull2) = policy_grasps.pinpull_targets(obs)
    (fpin1, fpull1), (fpin2, fpull2) = policy_grasps.pinpull_targets(flipped)
    # mirroring swaps left and right, so pin and pull trade places
    assert fpin1 == pytest.approx(mirrored(pull1, 70))
    assert fpull1 == pytest.approx(mirrored(pin1, 70))
    assert fpin2 == pytest.approx(mirrored(pull2, 70))
    assert fpull2 == pytest.approx(mirrored(pin2, 70))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 100), st.integers(0, 100)), min_size=8, max_size=30, unique=True))
def test_insertion_plan_on_random_hulls(points):
    hull = geometry.convex_hull(np.array(points))
    assume(len(hull) >= 3 and geometry.polygon_area(hull) >= 50.0)
    metrics = OpeningMetrics(a_ch=0.5, e_ch=2.0, hull=hull, center=geometry.polygon_centroid(hull), frame=None,
                             rim_pixel_count=len(points))
    targets = insertion_plan(metrics, 3)
    assert len(targets) == 3
    assert all(geometry.point_in_polygon(p, hull) for p in targets)

    u = np.asarray(geometry.pca_axes(hull.array).major_dir)
    along = hull.array @ u
    lo, hi = along.min(), along.max()
    width = (hi - lo) / 3
    for k, p in enumerate(targets):
        # each target sits in its own equal-width slab, in order along the major axis
        t = float(np.dot(p, u))
        assert lo + k * width - 1e-6 <= t <= lo + (k + 1) * width + 1e-6
