"""
SegMask: the 4-class label image every other module consumes, plus its file format.

Files are 8-bit single channel PGM (P5) or PNG with gray levels
background=0, bag=85, rim=170, handle=255.
"""

import hashlib
from pathlib import Path

import numpy as np
from PIL import Image

from package_autobag.common import (BACKGROUND, BAG, RIM, HANDLE, MASK_FILE_VALUES, DimensionMismatch,
                                    MaskFormatError)


class SegMask:
    """
    Holds a label image of shape (height, width) over {background, bag, rim, handle}.
    :param labels: 2D integer array, indexed [y, x]
    """
    def __init__(self, labels) -> None:
        labels = np.asarray(labels)
        if labels.ndim != 2:
            raise DimensionMismatch(f"label image must be 2D, got shape {labels.shape}")
        if labels.size and (labels.min() < BACKGROUND or labels.max() > HANDLE):
            raise MaskFormatError("labels must be in 0..3")
        self.labels = labels.astype(np.uint8)

    @classmethod
    def blank(cls, width: int, height: int) -> "SegMask":
        return cls(np.zeros((height, width), dtype=np.uint8))

    @classmethod
    def from_layers(cls, bag, rim=None, handle=None) -> "SegMask":
        """
        Build a mask from boolean layers. Precedence is handle > rim > bag.
        """
        bag = np.asarray(bag, dtype=bool)
        labels = np.where(bag, BAG, BACKGROUND).astype(np.uint8)
        if rim is not None:
            labels[np.asarray(rim, dtype=bool)] = RIM
        if handle is not None:
            labels[np.asarray(handle, dtype=bool)] = HANDLE
        return cls(labels)

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def shape(self):
        return self.labels.shape

    def layer(self, class_id: int) -> np.ndarray:
        return self.labels == class_id

    def foreground(self) -> np.ndarray:
        """Boolean layer of every pixel that is part of the bag (bag, rim or handle)."""
        return self.labels != BACKGROUND

    def pixels(self, class_id: int) -> np.ndarray:
        """
        Pixel set of one class as an (N, 2) int array of (x, y), raster order.
        """
        ys, xs = np.nonzero(self.labels == class_id)
        return np.stack([xs, ys], axis=1).astype(np.int64)

    def foreground_pixels(self) -> np.ndarray:
        ys, xs = np.nonzero(self.foreground())
        return np.stack([xs, ys], axis=1).astype(np.int64)

    def count(self, class_id: int) -> int:
        return int(np.count_nonzero(self.labels == class_id))

    def contains(self, x: float, y: float) -> bool:
        """True when (x, y) rounds to a pixel inside the image."""
        xi, yi = int(round(x)), int(round(y))
        return 0 <= xi < self.width and 0 <= yi < self.height

    def label_at(self, x: float, y: float) -> int:
        return int(self.labels[int(round(y)), int(round(x))])

    def digest(self) -> str:
        """Short content hash, used as the observation digest in trial logs."""
        h = hashlib.sha256()
        h.update(f"{self.width}x{self.height}".encode())
        h.update(self.labels.tobytes())
        return h.hexdigest()[:16]

    def copy(self) -> "SegMask":
        return SegMask(self.labels.copy())

    def __eq__(self, other) -> bool:
        if not isinstance(other, SegMask):
            return NotImplemented
        return self.labels.shape == other.labels.shape and bool(np.array_equal(self.labels, other.labels))

    def __repr__(self) -> str:
        counts = ", ".join(f"{c}={self.count(c)}" for c in (BAG, RIM, HANDLE))
        return f"SegMask({self.width}x{self.height}, {counts})"


def mask_to_gray(mask: SegMask) -> np.ndarray:
    lut = np.zeros(256, dtype=np.uint8)
    for class_id, value in MASK_FILE_VALUES.items():
        lut[class_id] = value
    return lut[mask.labels]


def gray_to_mask(gray: np.ndarray) -> SegMask:
    gray = np.asarray(gray)
    labels = np.full(gray.shape, 255, dtype=np.uint8)
    for class_id, value in MASK_FILE_VALUES.items():
        labels[gray == value] = class_id
    if np.any(labels == 255):
        bad = sorted(set(np.unique(gray[labels == 255]).tolist()))
        raise MaskFormatError(f"unexpected gray levels in mask file: {bad[:8]}")
    return SegMask(labels)


def write_mask(mask: SegMask, path) -> None:
    """
    Write a mask as PGM (P5) or PNG, chosen by the file extension.
    :param mask: SegMask
    :param path: str or Path ending in .pgm or .png
    """
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix not in (".pgm", ".png"):
        raise MaskFormatError(f"unsupported mask extension '{path.suffix}', use .pgm or .png")
    Image.fromarray(mask_to_gray(mask)).save(path, format="PPM" if suffix == ".pgm" else "PNG")


def read_mask(path) -> SegMask:
    """
    Read a PGM or PNG mask written by write_mask (or by hand with the same gray levels).
    """
    with Image.open(path) as img:
        if img.mode != "L":
            raise MaskFormatError(f"{path}: mask must be 8-bit single channel, got mode {img.mode}")
        gray = np.asarray(img)
    return gray_to_mask(gray)
