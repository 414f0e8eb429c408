"""Normalized bounding boxes and spatial labels.

All boxes downstream of ingestion live in normalized image coordinates:
corners in [0, 1], x growing rightward, y growing downward.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence, Tuple


class BoxError(ValueError):
    """Raised for degenerate or out-of-range boxes."""


class PositionLabel(str, Enum):
    """Cell of the 3x3 image grid that contains a box center."""

    LEFT_TOP = "left-top"
    TOP = "top"
    RIGHT_TOP = "right-top"
    LEFT = "left"
    CENTER = "center"
    RIGHT = "right"
    LEFT_BOTTOM = "left-bottom"
    BOTTOM = "bottom"
    RIGHT_BOTTOM = "right-bottom"


class DirectionLabel(str, Enum):
    """Motion direction of an instrument tip in image coordinates."""

    UPWARD = "upward"
    DOWNWARD = "downward"
    LEFT = "left"
    RIGHT = "right"
    UPPER_LEFT = "upper-left"
    UPPER_RIGHT = "upper-right"
    LOWER_LEFT = "lower-left"
    LOWER_RIGHT = "lower-right"


# grid[row][col], rows top to bottom, cols left to right
_POSITION_GRID = (
    (PositionLabel.LEFT_TOP, PositionLabel.TOP, PositionLabel.RIGHT_TOP),
    (PositionLabel.LEFT, PositionLabel.CENTER, PositionLabel.RIGHT),
    (PositionLabel.LEFT_BOTTOM, PositionLabel.BOTTOM, PositionLabel.RIGHT_BOTTOM),
)


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in normalized coordinates, strictly positive area."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self) -> None:
        for name, v in (("x1", self.x1), ("y1", self.y1), ("x2", self.x2), ("y2", self.y2)):
            if not (0.0 <= v <= 1.0):
                raise BoxError(f"coordinate {name}={v} outside [0, 1]")
        if not self.x1 < self.x2:
            raise BoxError(f"x1={self.x1} must be < x2={self.x2}")
        if not self.y1 < self.y2:
            raise BoxError(f"y1={self.y1} must be < y2={self.y2}")

    @property
    def center(self) -> Tuple[float, float]:
        return ((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)

    @property
    def area(self) -> float:
        return (self.x2 - self.x1) * (self.y2 - self.y1)

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.x1, self.y1, self.x2, self.y2)


def normalize_box(
    px_box: Sequence[float],
    width: int,
    height: int,
    frame_id: str | None = None,
) -> BoundingBox:
    """Scale a pixel-space box [x1, y1, x2, y2] into normalized coordinates.

    Args:
        px_box: pixel corners, x1 < x2 and y1 < y2 after clamping checks.
        width: image width in pixels, positive.
        height: image height in pixels, positive.
        frame_id: included in error messages when given.

    Raises:
        BoxError: degenerate (zero-area) or out-of-range pixel boxes.
    """
    where = f" in frame {frame_id!r}" if frame_id else ""
    if width <= 0 or height <= 0:
        raise BoxError(f"image size {width}x{height}{where} is not positive")
    if len(px_box) != 4:
        raise BoxError(f"pixel box {list(px_box)!r}{where} must have 4 entries")
    x1, y1, x2, y2 = (float(v) for v in px_box)
    if x1 < 0 or y1 < 0 or x2 > width or y2 > height:
        raise BoxError(f"pixel box {list(px_box)!r}{where} exceeds image bounds {width}x{height}")
    if x2 <= x1 or y2 <= y1:
        raise BoxError(f"pixel box {list(px_box)!r}{where} has zero or negative area")
    return BoundingBox(x1 / width, y1 / height, x2 / width, y2 / height)


def position_of(box: BoundingBox) -> PositionLabel:
    """Map a box center onto the 3x3 grid.

    Grid bounds fall at 1/3 and 2/3 of each axis; a center exactly on a
    boundary goes to the lower-index cell, so left/top wins ties.
    """
    cx, cy = box.center

    def cell(c: float) -> int:
        if c <= 1.0 / 3.0:
            return 0
        if c <= 2.0 / 3.0:
            return 1
        return 2

    return _POSITION_GRID[cell(cy)][cell(cx)]


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two normalized boxes, in [0, 1]."""
    ix1 = max(a.x1, b.x1)
    iy1 = max(a.y1, b.y1)
    ix2 = min(a.x2, b.x2)
    iy2 = min(a.y2, b.y2)
    iw = max(0.0, ix2 - ix1)
    ih = max(0.0, iy2 - iy1)
    inter = iw * ih
    if inter <= 0.0:
        return 0.0
    union = a.area + b.area - inter
    return inter / union
