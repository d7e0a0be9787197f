"""Template fallback: relocate a tracked object when proposals miss it.

When the selected chain stops short of the newest frame, the recent
matched crops are averaged into a luma template and slid over a search
region around the last known box. Zero-normalized cross-correlation makes
the search invariant to positive affine intensity changes.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .exceptions import (
    InsufficientHistoryError,
    TemplateLargerThanRegionError,
)
from .geometry import BoundingBox, Frame, clip_box, resize_bilinear
from .proposals import SOURCE_PREDICTED, ObjectProposal, score_saliency
from .saliency import SaliencyMap

TEMPLATE_SUPPORT_MAX = 3
DEFAULT_PEAK_GATE = 0.3
# each side of the search region extends by this fraction of the box size
SEARCH_INFLATION = 0.5
# objectness decay keeps a chain of predictions from outranking real proposals
PREDICTED_OBJECTNESS_DECAY = 0.8

_VAR_EPS = 1e-9


@dataclass(frozen=True)
class Template:
    """Mean luma patch of recent matched crops, sized like the newest one."""

    patch: np.ndarray
    support: int


def build_template(frames: Mapping[int, Frame], path) -> Template:
    """Average the luma crops of the last matched path vertices.

    Uses the last up-to-3 vertices of the chain (a chain of length >= 2 is
    matched throughout), resampling each crop to the newest vertex's box
    size. Raises InsufficientHistoryError for chains shorter than 2 or when
    a needed frame has left the window.
    """
    vertices = list(path.vertices)
    if len(vertices) < 2:
        raise InsufficientHistoryError(
            f"template needs at least 2 matched vertices, path has {len(vertices)}"
        )
    tail = vertices[-TEMPLATE_SUPPORT_MAX:]
    target = tail[-1].proposal.box
    crops = []
    for v in tail:
        frame = frames.get(v.frame)
        if frame is None:
            raise InsufficientHistoryError(f"frame {v.frame} is no longer retained")
        box = v.proposal.box
        crop = frame.luma[box.y : box.y2, box.x : box.x2]
        crops.append(resize_bilinear(crop, target.w, target.h))
    patch = np.mean(crops, axis=0)
    patch.setflags(write=False)
    return Template(patch=patch, support=len(crops))


def ncc_search(
    template: Template, frame: Frame, search: BoundingBox
) -> tuple[BoundingBox, float] | None:
    """Best zero-normalized cross-correlation offset inside a search region.

    Every placement of the template inside `search` is scored; offsets
    where either window is flat (zero variance) are skipped. Returns the
    best box and its peak in [-1, 1], or None when every offset was
    skipped. Ties resolve to the smallest row-major offset.
    """
    th, tw = template.patch.shape
    if search.x < 0 or search.y < 0 or search.x2 > frame.width or search.y2 > frame.height:
        raise ValueError(
            f"search region {search.as_tuple()} exceeds the {frame.width}x{frame.height} frame"
        )
    if th > search.h or tw > search.w:
        raise TemplateLargerThanRegionError(
            f"template {tw}x{th} does not fit the {search.w}x{search.h} search region"
        )

    t = template.patch
    t0 = t - t.mean()
    tvar = float(np.einsum("ij,ij->", t0, t0))
    if tvar <= _VAR_EPS:
        return None

    region = frame.luma[search.y : search.y2, search.x : search.x2]
    win = sliding_window_view(region, (th, tw))
    n = th * tw
    s1 = np.einsum("ijkl->ij", win)
    s2 = np.einsum("ijkl,ijkl->ij", win, win)
    cross = np.einsum("ijkl,kl->ij", win, t0)
    wvar = s2 - s1 * s1 / n

    valid = wvar > _VAR_EPS
    if not valid.any():
        return None
    scores = np.full(wvar.shape, -np.inf)
    scores[valid] = cross[valid] / np.sqrt(wvar[valid] * tvar)

    flat_idx = int(np.argmax(scores))
    oy, ox = divmod(flat_idx, scores.shape[1])
    peak = float(np.clip(scores[oy, ox], -1.0, 1.0))
    return BoundingBox(search.x + ox, search.y + oy, tw, th), peak


def inflate_box(box: BoundingBox, frame: Frame, fraction: float = SEARCH_INFLATION) -> BoundingBox:
    """Grow a box outward by `fraction` of its size per side, clipped to the frame."""
    dx = int(round(fraction * box.w))
    dy = int(round(fraction * box.h))
    grown = BoundingBox(box.x - dx, box.y - dy, box.w + 2 * dx, box.h + 2 * dy)
    return clip_box(grown, frame.width, frame.height)


def predict_proposal(
    template: Template,
    frame: Frame,
    last_box: BoundingBox,
    smap: SaliencyMap,
    peak_gate: float = DEFAULT_PEAK_GATE,
    index: int = 0,
) -> ObjectProposal | None:
    """Locate the template near the object's last box; None when it fails.

    The search region is `last_box` inflated by half its size per side. A
    peak below `peak_gate` is rejected; otherwise the proposal carries
    objectness PREDICTED_OBJECTNESS_DECAY * clamp(peak, 0, 1) and a
    saliency score against the frame's mask.
    """
    search = inflate_box(last_box, frame)
    try:
        found = ncc_search(template, frame, search)
    except TemplateLargerThanRegionError:
        return None
    if found is None:
        return None
    box, peak = found
    if peak < peak_gate:
        return None
    proposal = ObjectProposal(
        box=box,
        objectness=PREDICTED_OBJECTNESS_DECAY * float(np.clip(peak, 0.0, 1.0)),
        saliency=0.0,
        source=SOURCE_PREDICTED,
        index=index,
    )
    return replace(proposal, saliency=score_saliency(proposal, smap))
