"""Per-frame object proposals: ingestion, fallback generation, and filtering.

Proposals come either from an external proposal algorithm via a JSON
manifest, or from connected components of the saliency mask when no
manifest is supplied. Both paths feed the same saliency scoring and
saliency-aware non-maximum suppression.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy import ndimage

from .exceptions import NoOverlapError, ParseError, SchemaError
from .geometry import BoundingBox, clip_box, iou
from .saliency import SaliencyMap

SOURCE_EXTERNAL = "external"
SOURCE_FALLBACK = "fallback"
SOURCE_PREDICTED = "predicted"
_SOURCES = (SOURCE_EXTERNAL, SOURCE_FALLBACK, SOURCE_PREDICTED)

# components smaller than this are treated as pixel noise
MIN_COMPONENT_AREA = 16

DEFAULT_NMS_IOU = 0.5
DEFAULT_KEEP_MAX = 100
DEFAULT_PRE_NMS_CAP = 300


@dataclass(frozen=True)
class ObjectProposal:
    """Candidate object: box, objectness confidence, and saliency score.

    `index` is the proposal's position within its frame (file order for
    manifest proposals) and makes the (frame, index) pair unique.
    """

    box: BoundingBox
    objectness: float
    saliency: float = 0.0
    source: str = SOURCE_EXTERNAL
    index: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.objectness <= 1.0:
            raise ValueError(f"objectness must lie in [0, 1], got {self.objectness}")
        if not 0.0 <= self.saliency <= 1.0:
            raise ValueError(f"saliency must lie in [0, 1], got {self.saliency}")
        if self.source not in _SOURCES:
            raise ValueError(f"unknown proposal source {self.source!r}")


class ProposalManifest:
    """Parsed proposal manifest keyed by frame index.

    File schema: {"frames": [{"frame": int, "boxes": [{"x": int, "y": int,
    "w": int, "h": int, "objectness": float}, ...]}, ...]}. Unknown fields
    are ignored. Frames absent from the manifest yield empty lists.
    """

    def __init__(self, frames: dict[int, list[dict]]):
        self._frames = frames

    @classmethod
    def load(cls, path: str | Path) -> "ProposalManifest":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: not valid JSON ({exc})") from exc
        return cls._from_document(doc, str(path))

    @classmethod
    def _from_document(cls, doc, origin: str = "<manifest>") -> "ProposalManifest":
        if not isinstance(doc, dict) or not isinstance(doc.get("frames"), list):
            raise ParseError(f"{origin}: top level must be an object with a 'frames' list")
        frames: dict[int, list[dict]] = {}
        for entry in doc["frames"]:
            if not isinstance(entry, dict):
                raise ParseError(f"{origin}: frame entries must be objects")
            if "frame" not in entry:
                raise SchemaError(f"{origin}: frame entry missing 'frame' field")
            idx = entry["frame"]
            if not isinstance(idx, int) or isinstance(idx, bool) or idx < 0:
                raise SchemaError(f"{origin}: frame index must be a nonnegative integer, got {idx!r}")
            if idx in frames:
                raise ParseError(f"{origin}: duplicate entry for frame {idx}")
            boxes = entry.get("boxes", [])
            if not isinstance(boxes, list):
                raise ParseError(f"{origin}: 'boxes' of frame {idx} must be a list")
            for rec in boxes:
                cls._check_record(rec, idx, origin)
            frames[idx] = boxes
        return cls(frames)

    @staticmethod
    def _check_record(rec, frame_idx: int, origin: str) -> None:
        if not isinstance(rec, dict):
            raise ParseError(f"{origin}: box records of frame {frame_idx} must be objects")
        for field in ("x", "y", "w", "h", "objectness"):
            if field not in rec:
                raise SchemaError(f"{origin}: frame {frame_idx} box missing '{field}'")
        for field in ("x", "y", "w", "h"):
            if not isinstance(rec[field], int) or isinstance(rec[field], bool):
                raise SchemaError(f"{origin}: frame {frame_idx} '{field}' must be an integer")
        if rec["w"] < 1 or rec["h"] < 1:
            raise SchemaError(
                f"{origin}: frame {frame_idx} box size must be positive, got w={rec['w']}, h={rec['h']}"
            )
        obj = rec["objectness"]
        if not isinstance(obj, (int, float)) or isinstance(obj, bool) or not 0.0 <= obj <= 1.0:
            raise SchemaError(
                f"{origin}: frame {frame_idx} objectness must lie in [0, 1], got {obj!r}"
            )

    def frames(self) -> list[int]:
        return sorted(self._frames)

    def proposals_for(self, frame_index: int, width: int, height: int) -> list[ObjectProposal]:
        """Proposals of one frame, clipped to the frame, in file order.

        A frame with no manifest entry returns an empty list; that is a
        defined absence, not an error.
        """
        out: list[ObjectProposal] = []
        for i, rec in enumerate(self._frames.get(frame_index, [])):
            raw = BoundingBox(rec["x"], rec["y"], rec["w"], rec["h"])
            try:
                box = clip_box(raw, width, height)
            except NoOverlapError as exc:
                raise SchemaError(
                    f"frame {frame_index} box {raw.as_tuple()} lies outside the {width}x{height} frame"
                ) from exc
            out.append(
                ObjectProposal(
                    box=box,
                    objectness=float(rec["objectness"]),
                    saliency=0.0,
                    source=SOURCE_EXTERNAL,
                    index=i,
                )
            )
        return out


def load_proposals(
    manifest: ProposalManifest | str | Path,
    frame_index: int,
    width: int,
    height: int,
) -> list[ObjectProposal]:
    """Read one frame's proposals from a manifest (path or parsed)."""
    if not isinstance(manifest, ProposalManifest):
        manifest = ProposalManifest.load(manifest)
    return manifest.proposals_for(frame_index, width, height)


def generate_fallback_proposals(
    mask: np.ndarray, min_area: int = MIN_COMPONENT_AREA
) -> list[ObjectProposal]:
    """Proposals from 4-connected components of a binary saliency mask.

    Each component with at least `min_area` pixels becomes one proposal:
    its tight bounding box, with objectness equal to the component's fill
    ratio (component area over box area).
    """
    mask = np.asarray(mask, dtype=bool)
    labels, count = ndimage.label(mask)
    proposals: list[ObjectProposal] = []
    for label, slc in enumerate(ndimage.find_objects(labels), start=1):
        if slc is None:
            continue
        area = int((labels[slc] == label).sum())
        if area < min_area:
            continue
        ys, xs = slc
        box = BoundingBox(int(xs.start), int(ys.start), int(xs.stop - xs.start), int(ys.stop - ys.start))
        proposals.append(
            ObjectProposal(
                box=box,
                objectness=area / box.area,
                saliency=0.0,
                source=SOURCE_FALLBACK,
                index=len(proposals),
            )
        )
    return proposals


def score_saliency(proposal: ObjectProposal, smap: SaliencyMap) -> float:
    """Fraction of the box's pixels that are salient in the binary mask."""
    box = proposal.box
    if box.x < 0 or box.y < 0 or box.x2 > smap.width or box.y2 > smap.height:
        raise ValueError(
            f"box {box.as_tuple()} exceeds the {smap.width}x{smap.height} saliency map"
        )
    inside = int(smap.mask[box.y : box.y2, box.x : box.x2].sum())
    return inside / box.area


def score_proposals(proposals: list[ObjectProposal], smap: SaliencyMap) -> list[ObjectProposal]:
    return [replace(p, saliency=score_saliency(p, smap)) for p in proposals]


def _priority(p: ObjectProposal) -> tuple[float, float, int]:
    return (-p.saliency, -p.objectness, p.index)


def top_by_objectness(
    proposals: list[ObjectProposal], cap: int = DEFAULT_PRE_NMS_CAP
) -> list[ObjectProposal]:
    """Cap a proposal set to the `cap` most confident entries before NMS."""
    if len(proposals) <= cap:
        return list(proposals)
    return sorted(proposals, key=lambda p: (-p.objectness, p.index))[:cap]


def saliency_nms(
    proposals: list[ObjectProposal],
    iou_threshold: float = DEFAULT_NMS_IOU,
    keep_max: int = DEFAULT_KEEP_MAX,
) -> list[ObjectProposal]:
    """Greedy NMS that prefers salient proposals.

    Candidates are visited by descending (saliency, objectness, -index)
    priority; a candidate is kept unless it overlaps an already kept box
    with IoU strictly above `iou_threshold`. Stops after `keep_max` keeps.
    Output is in priority order.
    """
    if not 0.0 < iou_threshold < 1.0:
        raise ValueError(f"iou_threshold must lie in (0, 1), got {iou_threshold}")
    if keep_max < 1:
        raise ValueError(f"keep_max must be >= 1, got {keep_max}")
    kept: list[ObjectProposal] = []
    for cand in sorted(proposals, key=_priority):
        if len(kept) >= keep_max:
            break
        if all(iou(cand.box, k.box) <= iou_threshold for k in kept):
            kept.append(cand)
    return kept
