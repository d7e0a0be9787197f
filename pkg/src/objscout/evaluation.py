"""Detection metrics against per-frame ground-truth boxes.

Accounting is frame-level and single-object: each frame holds at most one
detection and at most one ground-truth box (the tight box of an annotated
foreground mask). A frame with both and IoU >= tau is a true positive; a
detection on a frame it cannot explain is a false positive; an unexplained
ground-truth box is a false negative; empty frames are ignored.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from PIL import Image

from .exceptions import NoGroundTruthError, NonBinaryMaskError, ParseError
from .geometry import BoundingBox, iou

DEFAULT_IOU_TAU = 0.5


@dataclass(frozen=True)
class GroundTruth:
    """Per-frame optional ground-truth boxes of one sequence."""

    sequence: str
    boxes: dict[int, BoundingBox | None]

    def frames_with_object(self) -> list[int]:
        return sorted(f for f, b in self.boxes.items() if b is not None)


@dataclass(frozen=True)
class FrameOutcome:
    """Hit/miss bookkeeping of one frame."""

    frame: int
    has_detection: bool
    has_gt: bool
    hit: bool


@dataclass(frozen=True)
class MetricReport:
    precision: float
    recall: float
    f_score: float
    corloc: float
    ap: float
    seconds_per_frame: float


def match_at_iou(
    detections: Mapping[int, BoundingBox | None],
    gt: GroundTruth,
    tau: float = DEFAULT_IOU_TAU,
) -> list[FrameOutcome]:
    """Per-frame hit flags of detections against ground truth at IoU `tau`."""
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must lie in (0, 1), got {tau}")
    outcomes = []
    for frame in sorted(set(detections) | set(gt.boxes)):
        det = detections.get(frame)
        box = gt.boxes.get(frame)
        hit = det is not None and box is not None and iou(det, box) >= tau
        outcomes.append(
            FrameOutcome(
                frame=frame,
                has_detection=det is not None,
                has_gt=box is not None,
                hit=hit,
            )
        )
    return outcomes


def count_outcomes(flags: Sequence[FrameOutcome]) -> tuple[int, int, int]:
    """(true positives, false positives, false negatives) over the flags."""
    tp = sum(1 for f in flags if f.hit)
    fp = sum(1 for f in flags if f.has_detection and not f.hit)
    fn = sum(1 for f in flags if f.has_gt and not f.hit)
    return tp, fp, fn


def precision_recall_f(flags: Sequence[FrameOutcome]) -> tuple[float, float, float]:
    """Precision, recall, and F-score with zero denominators mapping to 0."""
    tp, fp, fn = count_outcomes(flags)
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f_score = (
        2.0 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    )
    return precision, recall, f_score


def corloc(flags: Sequence[FrameOutcome]) -> float:
    """Fraction of ground-truth-bearing frames whose detection hits."""
    gt_frames = [f for f in flags if f.has_gt]
    if not gt_frames:
        raise NoGroundTruthError("no frame carries a ground-truth box")
    return sum(1 for f in gt_frames if f.hit) / len(gt_frames)


def average_precision(
    scored_detections: Sequence[tuple[int, BoundingBox, float]],
    gt: GroundTruth,
    tau: float = DEFAULT_IOU_TAU,
) -> float:
    """Area under the precision-recall curve of confidence-ranked detections.

    `scored_detections` holds (frame, box, confidence) triples. Each
    ground-truth frame may be claimed once, by the highest-confidence
    detection that overlaps it with IoU >= tau. Uses all-point
    interpolation: the precision envelope is made monotone from the right
    before integrating over recall.
    """
    gt_boxes = {f: b for f, b in gt.boxes.items() if b is not None}
    if not gt_boxes:
        raise NoGroundTruthError("no frame carries a ground-truth box")
    if not scored_detections:
        return 0.0

    order = sorted(scored_detections, key=lambda d: (-d[2], d[0]))
    claimed: set[int] = set()
    tp = np.zeros(len(order))
    fp = np.zeros(len(order))
    for i, (frame, box, _) in enumerate(order):
        target = gt_boxes.get(frame)
        if target is not None and frame not in claimed and iou(box, target) >= tau:
            tp[i] = 1.0
            claimed.add(frame)
        else:
            fp[i] = 1.0

    cum_tp = np.cumsum(tp)
    cum_fp = np.cumsum(fp)
    recalls = cum_tp / len(gt_boxes)
    precisions = cum_tp / (cum_tp + cum_fp)

    mrec = np.concatenate(([0.0], recalls, [1.0]))
    mpre = np.concatenate(([0.0], precisions, [0.0]))
    for i in range(len(mpre) - 1, 0, -1):
        mpre[i - 1] = max(mpre[i - 1], mpre[i])
    steps = np.nonzero(mrec[1:] != mrec[:-1])[0]
    return float(np.sum((mrec[steps + 1] - mrec[steps]) * mpre[steps + 1]))


def _mask_to_box(mask: np.ndarray, path: Path) -> BoundingBox | None:
    values = np.unique(mask)
    if len(values) > 2 or (len(values) == 2 and values[0] != 0):
        raise NonBinaryMaskError(
            f"{path}: mask values must be {{0, max}}, found {values[:8].tolist()}"
        )
    ys, xs = np.nonzero(mask)
    if xs.size == 0:
        return None
    x, y = int(xs.min()), int(ys.min())
    return BoundingBox(x, y, int(xs.max()) - x + 1, int(ys.max()) - y + 1)


def load_davis_gt(directory: str | Path) -> GroundTruth:
    """Ground truth from a DAVIS-style directory of binary mask images.

    Masks are named by zero-padded frame index; the tight box of the
    nonzero pixels becomes the frame's ground truth, and an all-zero mask
    means the frame has no visible object.
    """
    directory = Path(directory)
    paths = sorted(
        (p for p in directory.iterdir() if p.suffix.lower() == ".png"),
        key=lambda p: p.name,
    )
    if not paths:
        raise OSError(f"{directory}: no mask images found")
    boxes: dict[int, BoundingBox | None] = {}
    for path in paths:
        digits = re.findall(r"\d+", path.stem)
        if not digits:
            raise OSError(f"{path}: mask name carries no frame index")
        frame = int(digits[-1])
        with Image.open(path) as im:
            mask = np.asarray(im.convert("L"))
        boxes[frame] = _mask_to_box(mask, path)
    return GroundTruth(sequence=directory.name, boxes=boxes)


def load_gt_boxes(path: str | Path) -> GroundTruth:
    """Ground truth from a JSON box manifest (the synthetic generator's format)."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("frames"), list):
        raise ParseError(f"{path}: top level must be an object with a 'frames' list")
    boxes: dict[int, BoundingBox | None] = {}
    for entry in doc["frames"]:
        frame = entry["frame"]
        rec = entry.get("box")
        boxes[frame] = (
            BoundingBox(rec["x"], rec["y"], rec["w"], rec["h"]) if rec else None
        )
    return GroundTruth(sequence=doc.get("sequence", path.stem), boxes=boxes)


def load_ground_truth(path: str | Path) -> GroundTruth:
    """Dispatch on layout: a mask directory or a JSON box manifest."""
    path = Path(path)
    if path.is_dir():
        manifest = path / "gt.json"
        if manifest.is_file():
            return load_gt_boxes(manifest)
        return load_davis_gt(path)
    return load_gt_boxes(path)


METRICS_CSV_HEADER = "sequence,precision,recall,f_score,corloc,ap,seconds_per_frame"


def write_metrics_csv(path: str | Path, rows: Sequence[tuple[str, MetricReport]]) -> None:
    """Write one CSV row of metrics per sequence."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRICS_CSV_HEADER.split(","))
        for name, report in rows:
            writer.writerow(
                [
                    name,
                    f"{report.precision:.6f}",
                    f"{report.recall:.6f}",
                    f"{report.f_score:.6f}",
                    f"{report.corloc:.6f}",
                    f"{report.ap:.6f}",
                    f"{report.seconds_per_frame:.6f}",
                ]
            )


def evaluate_sequence(
    detections: Mapping[int, BoundingBox | None],
    scored_detections: Sequence[tuple[int, BoundingBox, float]],
    gt: GroundTruth,
    seconds_per_frame: float,
    tau: float = DEFAULT_IOU_TAU,
) -> MetricReport:
    """All metrics of one sequence at IoU threshold `tau`."""
    flags = match_at_iou(detections, gt, tau)
    precision, recall, f_score = precision_recall_f(flags)
    return MetricReport(
        precision=precision,
        recall=recall,
        f_score=f_score,
        corloc=corloc(flags),
        ap=average_precision(scored_detections, gt, tau),
        seconds_per_frame=seconds_per_frame,
    )
