"""Per-pixel saliency from a fast minimum-barrier-distance approximation.

The transform treats every border pixel as a background seed and propagates
a barrier cost (max minus min intensity along a path) inward with
alternating raster scans. Each pixel keeps the best (distance, path max,
path min) triple seen so far, so the result is always achieved by a real
4-connected path and therefore upper-bounds the exact barrier distance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit
from PIL import Image

from .exceptions import EmptyImageError, ZeroPassesError

DEFAULT_PASSES = 3
_OTSU_BINS = 256


@njit(cache=True)
def _scan_forward(intensity, dist, hi, lo):  # pragma: no cover - jitted
    h, w = intensity.shape
    for y in range(h):
        for x in range(w):
            v = intensity[y, x]
            if y > 0:
                ch = max(hi[y - 1, x], v)
                cl = min(lo[y - 1, x], v)
                if ch - cl < dist[y, x]:
                    dist[y, x] = ch - cl
                    hi[y, x] = ch
                    lo[y, x] = cl
            if x > 0:
                ch = max(hi[y, x - 1], v)
                cl = min(lo[y, x - 1], v)
                if ch - cl < dist[y, x]:
                    dist[y, x] = ch - cl
                    hi[y, x] = ch
                    lo[y, x] = cl


@njit(cache=True)
def _scan_backward(intensity, dist, hi, lo):  # pragma: no cover - jitted
    h, w = intensity.shape
    for y in range(h - 1, -1, -1):
        for x in range(w - 1, -1, -1):
            v = intensity[y, x]
            if y < h - 1:
                ch = max(hi[y + 1, x], v)
                cl = min(lo[y + 1, x], v)
                if ch - cl < dist[y, x]:
                    dist[y, x] = ch - cl
                    hi[y, x] = ch
                    lo[y, x] = cl
            if x < w - 1:
                ch = max(hi[y, x + 1], v)
                cl = min(lo[y, x + 1], v)
                if ch - cl < dist[y, x]:
                    dist[y, x] = ch - cl
                    hi[y, x] = ch
                    lo[y, x] = cl


def mbd_transform(luma: np.ndarray, passes: int = DEFAULT_PASSES) -> np.ndarray:
    """Approximate minimum barrier distance from the image border.

    Seeds (all border pixels) get distance 0; interior pixels get the
    barrier cost of the best path found within `passes` alternating
    forward/backward raster scans. A constant image maps to all zeros.
    """
    if passes < 1:
        raise ZeroPassesError("passes must be >= 1")
    luma = np.asarray(luma, dtype=np.float64)
    if luma.ndim != 2 or luma.size == 0:
        raise EmptyImageError(f"expected a nonempty 2-d image, got shape {luma.shape}")

    dist = np.full(luma.shape, np.inf)
    dist[0, :] = 0.0
    dist[-1, :] = 0.0
    dist[:, 0] = 0.0
    dist[:, -1] = 0.0
    hi = luma.copy()
    lo = luma.copy()

    for i in range(passes):
        if i % 2 == 0:
            _scan_forward(luma, dist, hi, lo)
        else:
            _scan_backward(luma, dist, hi, lo)
    return dist


def normalize_saliency(dmap: np.ndarray) -> np.ndarray:
    """Scale a distance map into [0, 1] by its maximum; all-zero maps pass through."""
    dmap = np.asarray(dmap, dtype=np.float64)
    if dmap.size == 0:
        raise EmptyImageError("cannot normalize an empty distance map")
    peak = dmap.max()
    if peak <= 0.0:
        return dmap.copy()
    return dmap / peak


def binarize(values: np.ndarray) -> tuple[np.ndarray, float]:
    """Split saliency values into a foreground mask via Otsu's criterion.

    Builds a 256-bin histogram, picks the threshold maximizing between-class
    variance (first bin on ties), and returns (values >= threshold, threshold).
    Degenerate maps with no usable split yield an all-background mask with a
    sentinel threshold of 1.0.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise EmptyImageError("cannot binarize an empty saliency map")
    flat = values.ravel()
    if flat.min() == flat.max():
        return np.zeros(values.shape, dtype=bool), 1.0

    bins = np.minimum((flat * _OTSU_BINS).astype(np.int64), _OTSU_BINS - 1)
    hist = np.bincount(bins, minlength=_OTSU_BINS).astype(np.float64)

    counts = hist.cumsum()
    moments = (hist * np.arange(_OTSU_BINS)).cumsum()
    w0 = counts[:-1]
    w1 = counts[-1] - w0
    valid = (w0 > 0) & (w1 > 0)
    if not valid.any():
        # all values share one bin: no split separates anything
        return values >= 1.0, 1.0
    mu0 = np.where(valid, moments[:-1] / np.where(w0 > 0, w0, 1.0), 0.0)
    mu1 = np.where(valid, (moments[-1] - moments[:-1]) / np.where(w1 > 0, w1, 1.0), 0.0)
    between = np.where(valid, w0 * w1 * (mu0 - mu1) ** 2, -1.0)

    split = int(np.argmax(between))
    threshold = (split + 1) / _OTSU_BINS
    return values >= threshold, threshold


@dataclass(frozen=True)
class SaliencyMap:
    """Normalized per-pixel saliency with its binarized foreground mask."""

    values: np.ndarray
    mask: np.ndarray
    threshold: float

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


def compute_saliency(luma: np.ndarray, passes: int = DEFAULT_PASSES) -> SaliencyMap:
    """Full per-frame saliency stage: transform, normalize, binarize."""
    values = normalize_saliency(mbd_transform(luma, passes))
    mask, threshold = binarize(values)
    values.setflags(write=False)
    mask.setflags(write=False)
    return SaliencyMap(values=values, mask=mask, threshold=threshold)


def save_saliency_png(smap: SaliencyMap, path) -> None:
    """Debug dump of the saliency values as an 8-bit grayscale PNG."""
    gray = np.rint(smap.values * 255.0).astype(np.uint8)
    Image.fromarray(gray, mode="L").save(path)
