"""Axis-aligned box arithmetic used by every downstream stage."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Box:
    """Axis-aligned rectangle in continuous pixel coordinates (x1 <= x2, y1 <= y2)."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self) -> None:
        # `not >=` also rejects NaN coordinates.
        if not (self.x2 >= self.x1 and self.y2 >= self.y1):
            raise ValueError(
                f"invalid box: ({self.x1}, {self.y1}, {self.x2}, {self.y2})"
            )

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return (self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0

    def contains_point(self, x: float, y: float) -> bool:
        """Inclusive containment test."""
        return self.x1 <= x <= self.x2 and self.y1 <= y <= self.y2

    def translate(self, dx: float, dy: float) -> "Box":
        return Box(self.x1 + dx, self.y1 + dy, self.x2 + dx, self.y2 + dy)

    def scale(self, factor: float) -> "Box":
        """Rescale all coordinates about the origin."""
        if factor <= 0:
            raise ValueError("scale factor must be positive")
        return Box(self.x1 * factor, self.y1 * factor,
                   self.x2 * factor, self.y2 * factor)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return self.x1, self.y1, self.x2, self.y2


@dataclass(frozen=True)
class ImageDims:
    """Image extent in pixels."""

    width: float
    height: float

    def __post_init__(self) -> None:
        if not (self.width > 0 and self.height > 0):
            raise ValueError(f"invalid image dims: {self.width}x{self.height}")


def iou(a: Box, b: Box) -> float:
    """Intersection over union of two boxes, in [0, 1].

    Open-interval area convention (no +1 pixel). Two degenerate boxes with
    zero union area yield 0 by convention.
    """
    ix = min(a.x2, b.x2) - max(a.x1, b.x1)
    iy = min(a.y2, b.y2) - max(a.y1, b.y1)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    union = a.area + b.area - inter
    if union <= 0:
        return 0.0
    return inter / union


def clip_box(b: Box, dims: ImageDims) -> Box:
    """Clamp a box to the image; a box fully outside collapses to a zero-area
    box at the nearest border."""

    def clamp(v: float, hi: float) -> float:
        return min(max(v, 0.0), hi)

    return Box(
        clamp(b.x1, dims.width),
        clamp(b.y1, dims.height),
        clamp(b.x2, dims.width),
        clamp(b.y2, dims.height),
    )


def expand_square(b: Box, scale: float, dims: ImageDims) -> Box:
    """Square region of side ``scale * max(width, height)`` centred on ``b``.

    Near borders the square is shifted, not shrunk, so object aspect inside
    the region is preserved. If the side exceeds an image dimension it is
    capped at ``min(side, width, height)`` and stays square.
    """
    if scale < 1:
        raise ValueError(f"scale must be >= 1, got {scale}")
    side = scale * max(b.width, b.height)
    side = min(side, dims.width, dims.height)
    cx, cy = b.center
    x1 = min(max(cx - side / 2.0, 0.0), dims.width - side)
    y1 = min(max(cy - side / 2.0, 0.0), dims.height - side)
    # Final clip guards the last-ulp overflow of x1 + side.
    return clip_box(Box(x1, y1, x1 + side, y1 + side), dims)
