#! /usr/bin/env python3
"""
2D geometry over pixel coordinates: components, hulls, areas, PCA axes, oriented rectangles, morphology.

Points are (x, y) with x the column and y the row. Orientation words (CCW, signed area) refer to the
(x, y) values as given, so a CCW polygon has positive shoelace area.
"""

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from scipy import ndimage

from package_autobag.common import BACKGROUND, BAG, EmptyInput, DegenerateInput
from package_autobag.segmask import SegMask

# 8-connectivity
EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class Polygon:
    """
    Ordered polygon vertices, counter-clockwise.
    :param vertices: tuple of (x, y) float pairs
    """
    vertices: Tuple[Tuple[float, float], ...]

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.vertices, dtype=float).reshape(-1, 2)

    def __len__(self) -> int:
        return len(self.vertices)


@dataclass(frozen=True)
class AxisFrame:
    """
    PCA frame of a point set. Lengths are 1 sigma (sqrt of the covariance eigenvalues).
    """
    center: Tuple[float, float]
    major_dir: Tuple[float, float]
    minor_dir: Tuple[float, float]
    major_len: float
    minor_len: float

    @property
    def minor_angle(self) -> float:
        """Angle of the minor axis in radians, folded into (-pi/2, pi/2]."""
        return fold_axis_angle(math.atan2(self.minor_dir[1], self.minor_dir[0]))

    @property
    def major_angle(self) -> float:
        return fold_axis_angle(math.atan2(self.major_dir[1], self.major_dir[0]))


def fold_axis_angle(angle: float) -> float:
    """
    An axis has no sign: fold an angle into (-pi/2, pi/2].
    """
    folded = math.fmod(angle, math.pi)
    if folded <= -math.pi / 2:
        folded += math.pi
    elif folded > math.pi / 2:
        folded -= math.pi
    return folded


def as_points(points) -> np.ndarray:
    pts = np.asarray(points)
    if pts.size == 0:
        return pts.reshape(0, 2)
    return pts.reshape(-1, 2)


def connected_components(mask: SegMask, class_id: int) -> List[np.ndarray]:
    """
    8-connected components of one class, largest first. Equal sizes keep raster order of their first pixel.
    :param mask: SegMask
    :param class_id: label to split
    :return: list of (N, 2) int arrays of (x, y)
    """
    labelled, count = ndimage.label(mask.labels == class_id, structure=EIGHT_CONNECTED)
    if count == 0:
        return []
    ys, xs = np.nonzero(labelled)
    ids = labelled[ys, xs]
    order = np.argsort(ids, kind="stable")
    ids, xs, ys = ids[order], xs[order], ys[order]
    splits = np.flatnonzero(np.diff(ids)) + 1
    components = [np.stack([x, y], axis=1).astype(np.int64)
                  for x, y in zip(np.split(xs, splits), np.split(ys, splits))]
    # ndimage numbers components in raster order of their first pixel
    components.sort(key=lambda c: -len(c))
    return components


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _canonical_start(vertices: list) -> list:
    """Rotate a vertex cycle to start at the lowest-then-leftmost vertex (min y, then min x)."""
    start = min(range(len(vertices)), key=lambda i: (round(vertices[i][1], 9), round(vertices[i][0], 9)))
    return vertices[start:] + vertices[:start]


def row_extremes(pts: np.ndarray) -> np.ndarray:
    """
    Leftmost and rightmost point of every distinct y. Only these can be hull vertices.
    """
    order = np.lexsort((pts[:, 0], pts[:, 1]))
    ordered = pts[order]
    ys = ordered[:, 1]
    starts = np.flatnonzero(np.r_[True, ys[1:] != ys[:-1]])
    ends = np.r_[starts[1:], len(ordered)] - 1
    return np.concatenate([ordered[starts], ordered[ends]])


def convex_hull(points) -> Polygon:
    """
    Minimal convex polygon containing all points (monotone chain). CCW, collinear boundary points removed,
    canonical start at the lowest-then-leftmost vertex.
    :param points: (N, 2) array-like of (x, y)
    :return: Polygon with 1, 2 or >= 3 vertices
    """
    pts = as_points(points)
    if len(pts) == 0:
        raise EmptyInput("convex_hull of an empty point set")
    pts = row_extremes(pts)
    # np.unique sorts rows by x then y
    pts = [tuple(p) for p in np.unique(pts, axis=0).tolist()]
    if len(pts) == 1:
        return Polygon(((float(pts[0][0]), float(pts[0][1])),))

    lower = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    hull = _canonical_start([(float(x), float(y)) for x, y in hull])
    return Polygon(tuple(hull))


def polygon_area(poly: Polygon) -> float:
    """
    Shoelace area, >= 0. Degenerate polygons (<= 2 vertices) have area 0.
    """
    if len(poly) < 3:
        return 0.0
    v = poly.array
    x, y = v[:, 0], v[:, 1]
    return float(abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))) / 2.0)


def polygon_centroid(poly: Polygon) -> Tuple[float, float]:
    """
    Area centroid of a polygon. Falls back to the vertex mean when the area vanishes.
    """
    v = poly.array
    if len(v) == 0:
        raise EmptyInput("centroid of an empty polygon")
    if len(v) >= 3:
        x, y = v[:, 0], v[:, 1]
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cross = x * yn - xn * y
        signed = cross.sum() / 2.0
        if abs(signed) > 1e-12:
            cx = float(((x + xn) * cross).sum() / (6.0 * signed))
            cy = float(((y + yn) * cross).sum() / (6.0 * signed))
            return cx, cy
    mean = v.mean(axis=0)
    return float(mean[0]), float(mean[1])


def centroid(points) -> Tuple[float, float]:
    pts = as_points(points)
    if len(pts) == 0:
        raise EmptyInput("centroid of an empty point set")
    mean = pts.astype(float).mean(axis=0)
    return float(mean[0]), float(mean[1])


def pca_axes(points) -> AxisFrame:
    """
    Principal axes of a point set.
    :param points: (N, 2) array-like, N >= 2
    :return: AxisFrame; lengths are sqrt of the covariance eigenvalues, major_dir has a non-negative x
        component, minor_dir is major_dir rotated by +90 degrees
    """
    pts = as_points(points).astype(float)
    if len(pts) < 2:
        raise DegenerateInput(f"pca_axes needs at least 2 points, got {len(pts)}")
    center = pts.mean(axis=0)
    cov = np.cov(pts.T, bias=True)
    eigenvalues, eigenvectors = np.linalg.eigh(cov)
    major = eigenvectors[:, 1]
    if major[0] < -1e-12 or (abs(major[0]) <= 1e-12 and major[1] < 0):
        major = -major
    major = major / np.linalg.norm(major)
    minor = np.array([-major[1], major[0]])
    major_len = math.sqrt(max(float(eigenvalues[1]), 0.0))
    minor_len = math.sqrt(max(float(eigenvalues[0]), 0.0))
    return AxisFrame(center=(float(center[0]), float(center[1])),
                     major_dir=(float(major[0]), float(major[1])),
                     minor_dir=(float(minor[0]), float(minor[1])),
                     major_len=major_len,
                     minor_len=min(minor_len, major_len))


def min_area_rectangle(points) -> Polygon:
    """
    Minimum-area oriented bounding rectangle (rotating calipers over the hull edges).
    :param points: (N, 2) array-like with at least 3 non-collinear points
    :return: 4-vertex CCW Polygon, one edge collinear with a hull edge
    """
    hull = convex_hull(points)
    if len(hull) < 3:
        raise DegenerateInput("min_area_rectangle needs non-collinear points")
    v = hull.array
    best = None
    for i in range(len(v)):
        edge = v[(i + 1) % len(v)] - v[i]
        u = edge / np.linalg.norm(edge)
        n = np.array([-u[1], u[0]])
        s = v @ u
        t = v @ n
        area = (s.max() - s.min()) * (t.max() - t.min())
        if best is None or area < best[0] * (1.0 - 1e-12):
            best = (area, u, n, s.min(), s.max(), t.min(), t.max())
    _, u, n, s0, s1, t0, t1 = best
    corners = [s0 * u + t0 * n, s1 * u + t0 * n, s1 * u + t1 * n, s0 * u + t1 * n]
    corners = _canonical_start([(float(c[0]), float(c[1])) for c in corners])
    return Polygon(tuple(corners))


def disk(radius: int) -> np.ndarray:
    """
    Disk structuring element {(dx, dy): dx^2 + dy^2 <= r^2}.
    """
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    dy, dx = np.ogrid[-radius:radius + 1, -radius:radius + 1]
    return dx * dx + dy * dy <= radius * radius


def dilate_layer(layer: np.ndarray, radius: int) -> np.ndarray:
    layer = np.asarray(layer, dtype=bool)
    if radius == 0:
        return layer.copy()
    return ndimage.binary_dilation(layer, structure=disk(radius))


def erode_layer(layer: np.ndarray, radius: int) -> np.ndarray:
    layer = np.asarray(layer, dtype=bool)
    if radius == 0:
        return layer.copy()
    # pixels beyond the border count as set, so the image edge does not erode
    return ndimage.binary_erosion(layer, structure=disk(radius), border_value=1)


def dilate_mask(mask: SegMask, class_id: int, radius: int) -> SegMask:
    """
    Grow one class by a disk of the given radius. Only background and plain bag pixels are taken over
    (for class bag, only background); existing labels of the other foreground classes win.
    """
    grown = dilate_layer(mask.layer(class_id), radius)
    writable = mask.labels == BACKGROUND
    if class_id != BAG:
        writable |= mask.labels == BAG
    labels = mask.labels.copy()
    labels[grown & writable] = class_id
    return SegMask(labels)


def remove_small_components(layer: np.ndarray, min_size: int) -> np.ndarray:
    """
    Drop 8-connected components smaller than min_size pixels.
    """
    layer = np.asarray(layer, dtype=bool)
    if min_size <= 1:
        return layer.copy()
    labelled, count = ndimage.label(layer, structure=EIGHT_CONNECTED)
    if count == 0:
        return layer.copy()
    sizes = np.bincount(labelled.ravel())
    keep = sizes >= min_size
    keep[0] = False
    return keep[labelled]


def fill_polygon(poly: Polygon, width: int, height: int) -> np.ndarray:
    """
    Pixels whose centers lie inside or on a convex polygon, clipped to the image.
    :return: (N, 2) int array of (x, y), raster order
    """
    v = poly.array
    if len(v) < 3:
        raise DegenerateInput("fill_polygon needs at least 3 vertices")
    x0 = max(int(math.floor(v[:, 0].min())), 0)
    x1 = min(int(math.ceil(v[:, 0].max())), width - 1)
    y0 = max(int(math.floor(v[:, 1].min())), 0)
    y1 = min(int(math.ceil(v[:, 1].max())), height - 1)
    if x1 < x0 or y1 < y0:
        return np.zeros((0, 2), dtype=np.int64)
    ys, xs = np.mgrid[y0:y1 + 1, x0:x1 + 1]
    inside = np.ones(xs.shape, dtype=bool)
    for i in range(len(v)):
        ax, ay = v[i]
        bx, by = v[(i + 1) % len(v)]
        inside &= (bx - ax) * (ys - ay) - (by - ay) * (xs - ax) >= -1e-9
    return np.stack([xs[inside], ys[inside]], axis=1).astype(np.int64)


def point_in_polygon(point: Sequence[float], poly: Polygon, strict: bool = False) -> bool:
    """
    Point test against a convex CCW polygon. strict=True excludes the boundary.
    """
    v = poly.array
    if len(v) < 3:
        return False
    px, py = point
    tolerance = -1e-9 if not strict else 1e-9
    for i in range(len(v)):
        ax, ay = v[i]
        bx, by = v[(i + 1) % len(v)]
        if (bx - ax) * (py - ay) - (by - ay) * (px - ax) < tolerance:
            return False
    return True


def clip_polygon(poly: Polygon, normal: Sequence[float], offset: float) -> Polygon:
    """
    Keep the part of a convex polygon where dot(normal, p) >= offset (Sutherland-Hodgman, one plane).
    Returns an empty Polygon when nothing is left.
    """
    v = poly.array
    nx, ny = normal
    kept = []
    for i in range(len(v)):
        a = v[i]
        b = v[(i + 1) % len(v)]
        da = nx * a[0] + ny * a[1] - offset
        db = nx * b[0] + ny * b[1] - offset
        if da >= 0:
            kept.append((float(a[0]), float(a[1])))
        if (da >= 0) != (db >= 0):
            t = da / (da - db)
            kept.append((float(a[0] + t * (b[0] - a[0])), float(a[1] + t * (b[1] - a[1]))))
    return Polygon(tuple(kept))


def rotate_points(points, angle: float, center: Sequence[float] = (0.0, 0.0)) -> np.ndarray:
    """
    Rotate points by angle (radians) about center, (x, y) -> R (x, y).
    """
    pts = as_points(points).astype(float)
    c, s = math.cos(angle), math.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    return (pts - np.asarray(center, dtype=float)) @ rot.T + np.asarray(center, dtype=float)
