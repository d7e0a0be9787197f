"""Image and box primitives shared by every pipeline stage.

Boxes are closed integer pixel rectangles: a box (x, y, w, h) covers the
pixel columns [x, x+w) and rows [y, y+h), so area is exactly w*h pixels.
Frames carry RGB and derived luma planes as float arrays in [0, 1].
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np
from PIL import Image

from .exceptions import NoOverlapError

# ITU-R BT.601 luma weights; fixed so the saliency transform sees one
# deterministic channel.
LUMA_WEIGHTS = (0.299, 0.587, 0.114)

FRAME_EXTENSIONS = {".png", ".ppm", ".jpg", ".jpeg"}


@dataclass(frozen=True, order=True)
class BoundingBox:
    """Axis-aligned pixel rectangle with top-left corner and positive size."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self) -> None:
        if self.w < 1 or self.h < 1:
            raise ValueError(f"box size must be positive, got w={self.w}, h={self.h}")

    @property
    def x2(self) -> int:
        """One past the rightmost pixel column."""
        return self.x + self.w

    @property
    def y2(self) -> int:
        """One past the bottom pixel row."""
        return self.y + self.h

    @property
    def area(self) -> int:
        return self.w * self.h

    def as_tuple(self) -> tuple[int, int, int, int]:
        return self.x, self.y, self.w, self.h


@dataclass(frozen=True)
class Frame:
    """One image of a sequence with its position index.

    `rgb` is (height, width, 3) and `luma` (height, width); both float64 in
    [0, 1]. Arrays are marked read-only so frames behave as values.
    """

    index: int
    rgb: np.ndarray
    luma: np.ndarray

    @property
    def width(self) -> int:
        return self.rgb.shape[1]

    @property
    def height(self) -> int:
        return self.rgb.shape[0]

    @classmethod
    def from_rgb(cls, rgb: np.ndarray, index: int) -> "Frame":
        rgb = np.asarray(rgb, dtype=np.float64)
        if rgb.ndim != 3 or rgb.shape[2] != 3:
            raise ValueError(f"rgb must be (h, w, 3), got shape {rgb.shape}")
        if rgb.size == 0:
            raise ValueError("frame must contain at least one pixel")
        if rgb.min() < 0.0 or rgb.max() > 1.0:
            raise ValueError("rgb intensities must lie in [0, 1]")
        luma = rgb @ np.asarray(LUMA_WEIGHTS)
        rgb.setflags(write=False)
        luma.setflags(write=False)
        return cls(index=index, rgb=rgb, luma=luma)


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes, on integer pixel counts."""
    iw = min(a.x2, b.x2) - max(a.x, b.x)
    ih = min(a.y2, b.y2) - max(a.y, b.y)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = a.area + b.area - inter
    return inter / union


def clip_box(box: BoundingBox, width: int, height: int) -> BoundingBox:
    """Clip `box` to [0, width) x [0, height).

    Raises NoOverlapError when the box shares no pixel with the frame.
    """
    x = max(box.x, 0)
    y = max(box.y, 0)
    x2 = min(box.x2, width)
    y2 = min(box.y2, height)
    if x2 <= x or y2 <= y:
        raise NoOverlapError(
            f"box {box.as_tuple()} lies outside a {width}x{height} frame"
        )
    if (x, y, x2 - x, y2 - y) == box.as_tuple():
        return box
    return BoundingBox(x, y, x2 - x, y2 - y)


def resize_bilinear(image: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Bilinear resample to (out_h, out_w); accepts (h, w) or (h, w, c).

    Output pixel centres map to input coordinates via the half-pixel
    convention, so an identity-size resize reproduces the input exactly and
    all outputs are convex combinations of input values.
    """
    if out_w < 1 or out_h < 1:
        raise ValueError(f"output size must be positive, got {out_w}x{out_h}")
    squeeze = image.ndim == 2
    img = image[:, :, None] if squeeze else image
    in_h, in_w = img.shape[:2]

    ys = np.clip((np.arange(out_h) + 0.5) * (in_h / out_h) - 0.5, 0.0, in_h - 1.0)
    xs = np.clip((np.arange(out_w) + 0.5) * (in_w / out_w) - 0.5, 0.0, in_w - 1.0)
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    wy = (ys - y0)[:, None, None]
    wx = (xs - x0)[None, :, None]

    top = img[np.ix_(y0, x0)] * (1.0 - wx) + img[np.ix_(y0, x1)] * wx
    bot = img[np.ix_(y1, x0)] * (1.0 - wx) + img[np.ix_(y1, x1)] * wx
    out = top * (1.0 - wy) + bot * wy
    return out[:, :, 0] if squeeze else out


def crop_resize(frame: Frame, box: BoundingBox, out_w: int, out_h: int) -> np.ndarray:
    """Crop `box` from the frame and bilinearly resize to (out_h, out_w, 3)."""
    clipped = clip_box(box, frame.width, frame.height)
    patch = frame.rgb[clipped.y : clipped.y2, clipped.x : clipped.x2]
    return resize_bilinear(patch, out_w, out_h)


def load_frame(path: str | Path, index: int) -> Frame:
    """Load one 8-bit image file (PNG, PPM P6, or JPEG) as a frame."""
    with Image.open(path) as im:
        rgb = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
    return Frame.from_rgb(rgb, index)


def _frame_sort_key(path: Path) -> tuple:
    digits = re.findall(r"\d+", path.stem)
    return (int(digits[-1]), path.name) if digits else (float("inf"), path.name)


def list_frame_paths(directory: str | Path) -> list[Path]:
    """Image files of a sequence directory in frame order.

    Files are ordered by the last integer in their stem (DAVIS-style
    zero-padded names), falling back to lexicographic order.
    """
    directory = Path(directory)
    paths = [
        p
        for p in directory.iterdir()
        if p.is_file() and p.suffix.lower() in FRAME_EXTENSIONS
    ]
    return sorted(paths, key=_frame_sort_key)


def iter_frames(directory: str | Path) -> Iterator[Frame]:
    """Yield the frames of a sequence directory one at a time, index 0-based."""
    for index, path in enumerate(list_frame_paths(directory)):
        yield load_frame(path, index)
