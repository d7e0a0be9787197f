"""End-to-end per-frame orchestration and the public estimator.

`SalientObjectDiscovery` is a parameter holder in the scikit-learn style:
construction stores configuration, `predict` maps a frame sequence to one
detection record per frame. Streaming callers open a `DiscoverySession`
instead and feed frames in index order; the session owns the sliding
window state and retains at most window+1 frames at any moment.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from sklearn.base import BaseEstimator

from .exceptions import CountMismatchError, InsufficientHistoryError, NonContiguousFrameError
from .features import DESCRIPTOR_DIM, extract_descriptor, load_embeddings
from .geometry import BoundingBox, Frame
from .graph import (
    DEFAULT_GATE,
    DEFAULT_PATH_WEIGHT,
    DEFAULT_WINDOW,
    CorrespondenceGraph,
    TrackPath,
    Vertex,
)
from .proposals import (
    DEFAULT_KEEP_MAX,
    DEFAULT_NMS_IOU,
    DEFAULT_PRE_NMS_CAP,
    MIN_COMPONENT_AREA,
    ProposalManifest,
    generate_fallback_proposals,
    saliency_nms,
    score_proposals,
    top_by_objectness,
)
from .saliency import DEFAULT_PASSES, SaliencyMap, compute_saliency
from .template import DEFAULT_PEAK_GATE, build_template, predict_proposal
from .validation import as_frames, check_params


@dataclass(frozen=True)
class DetectionRecord:
    """Per-frame output: the discovered object's box, if any, plus timings.

    The box may be absent only when the window holds no vertices at all and
    prediction failed. `timings_ms` is in-memory bookkeeping; serialized
    records carry only the detection fields so identical runs produce
    identical files.
    """

    frame: int
    box: BoundingBox | None
    objectness: float | None
    source: str | None
    timings_ms: dict[str, float] = field(default_factory=dict)

    def to_json(self) -> str:
        doc = {
            "frame": self.frame,
            "box": (
                {"x": self.box.x, "y": self.box.y, "w": self.box.w, "h": self.box.h}
                if self.box is not None
                else None
            ),
            "objectness": self.objectness,
            "source": self.source,
        }
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "DetectionRecord":
        doc = json.loads(line)
        box = doc.get("box")
        return cls(
            frame=doc["frame"],
            box=BoundingBox(box["x"], box["y"], box["w"], box["h"]) if box else None,
            objectness=doc.get("objectness"),
            source=doc.get("source"),
        )


def write_detections(path: str | Path, records: Iterable[DetectionRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(record.to_json() + "\n")


def read_detections(path: str | Path) -> list[DetectionRecord]:
    with open(path, "r", encoding="utf-8") as fh:
        return [DetectionRecord.from_json(line) for line in fh if line.strip()]


class DiscoverySession:
    """Streaming state over one image sequence; frames must arrive in order."""

    def __init__(
        self,
        *,
        window: int = DEFAULT_WINDOW,
        keep_max: int = DEFAULT_KEEP_MAX,
        nms_iou: float = DEFAULT_NMS_IOU,
        gate: float = DEFAULT_GATE,
        path_weight: float = DEFAULT_PATH_WEIGHT,
        ncc_peak_gate: float = DEFAULT_PEAK_GATE,
        passes: int = DEFAULT_PASSES,
        pre_nms_cap: int = DEFAULT_PRE_NMS_CAP,
        min_component_area: int = MIN_COMPONENT_AREA,
        manifest: ProposalManifest | None = None,
        embedding_dir: str | Path | None = None,
    ):
        check_params(
            window=window,
            keep_max=keep_max,
            nms_iou=nms_iou,
            gate=gate,
            path_weight=path_weight,
            ncc_peak_gate=ncc_peak_gate,
            passes=passes,
            pre_nms_cap=pre_nms_cap,
            min_component_area=min_component_area,
        )
        self.window = window
        self.keep_max = keep_max
        self.nms_iou = nms_iou
        self.gate = gate
        self.path_weight = path_weight
        self.ncc_peak_gate = ncc_peak_gate
        self.passes = passes
        self.pre_nms_cap = pre_nms_cap
        self.min_component_area = min_component_area
        self._manifest = manifest
        self._embedding_dir = Path(embedding_dir) if embedding_dir is not None else None
        self._graph = CorrespondenceGraph(window=window, gate=gate)
        self._recent: dict[int, Frame] = {}
        self._dims: tuple[int, int] | None = None
        self._run_dim: int | None = DESCRIPTOR_DIM if embedding_dir is None else None

    @property
    def retained_frames(self) -> int:
        return len(self._recent)

    def process_frame(self, frame: Frame) -> DetectionRecord:
        """Run the full stage chain on one frame and emit its detection."""
        self._check_sequence(frame)
        timings: dict[str, float] = {}
        t_start = time.perf_counter()

        t = time.perf_counter()
        smap = compute_saliency(frame.luma, self.passes)
        timings["saliency"] = (time.perf_counter() - t) * 1e3

        t = time.perf_counter()
        if self._manifest is not None:
            proposals = self._manifest.proposals_for(frame.index, frame.width, frame.height)
        else:
            proposals = generate_fallback_proposals(smap.mask, self.min_component_area)
        proposals = top_by_objectness(proposals, self.pre_nms_cap)
        timings["proposals"] = (time.perf_counter() - t) * 1e3

        t = time.perf_counter()
        proposals = score_proposals(proposals, smap)
        proposals = saliency_nms(proposals, self.nms_iou, self.keep_max)
        timings["nms"] = (time.perf_counter() - t) * 1e3

        t = time.perf_counter()
        embeddings = self._embed(frame, proposals)
        timings["embed"] = (time.perf_counter() - t) * 1e3

        t = time.perf_counter()
        vertices = [
            Vertex(frame=frame.index, index=p.index, proposal=p, embedding=e)
            for p, e in zip(proposals, embeddings)
        ]
        self._graph.update(frame.index, vertices)
        best = self._graph.select_best_path(self.path_weight)
        timings["graph"] = (time.perf_counter() - t) * 1e3

        t = time.perf_counter()
        self._recent[frame.index] = frame
        if best is not None and best.last.frame < frame.index:
            predicted = self._try_predict(frame, smap, best)
            if predicted is not None:
                best = predicted
        self._prune_recent()
        timings["predict"] = (time.perf_counter() - t) * 1e3

        timings["total"] = (time.perf_counter() - t_start) * 1e3
        if best is None:
            return DetectionRecord(frame.index, None, None, None, timings)
        winner = best.last.proposal
        return DetectionRecord(frame.index, winner.box, winner.objectness, winner.source, timings)

    def _check_sequence(self, frame: Frame) -> None:
        if self._dims is None:
            self._dims = (frame.width, frame.height)
        elif (frame.width, frame.height) != self._dims:
            raise ValueError(
                f"frame {frame.index} is {frame.width}x{frame.height}, "
                f"sequence started at {self._dims[0]}x{self._dims[1]}"
            )
        latest = self._graph.latest_frame
        if latest is not None and frame.index != latest + 1:
            raise NonContiguousFrameError(f"expected frame {latest + 1}, got {frame.index}")

    def _embed(self, frame: Frame, proposals) -> list:
        if self._embedding_dir is None:
            return [extract_descriptor(frame, p.box) for p in proposals]
        rows = load_embeddings(self._embedding_dir, frame.index, self._run_dim)
        if len(rows) != len(proposals):
            raise CountMismatchError(
                f"frame {frame.index}: file holds {len(rows)} embeddings "
                f"for {len(proposals)} post-NMS proposals"
            )
        if self._run_dim is None and rows.shape[0] > 0:
            self._run_dim = int(rows.shape[1])
        return list(rows)

    def _try_predict(self, frame: Frame, smap: SaliencyMap, best: TrackPath) -> TrackPath | None:
        """Insert a template-predicted vertex; None when prediction fails."""
        try:
            template = build_template(self._recent, best)
        except InsufficientHistoryError:
            return None
        occupied = self._graph.vertices_of(frame.index)
        next_index = max((v.index for v in occupied), default=-1) + 1
        proposal = predict_proposal(
            template,
            frame,
            best.last.proposal.box,
            smap,
            self.ncc_peak_gate,
            index=next_index,
        )
        if proposal is None:
            return None
        if self._embedding_dir is None:
            embedding = extract_descriptor(frame, proposal.box)
        else:
            # no file row exists for a predicted box; carry the tracked
            # object's appearance forward instead
            embedding = best.last.embedding
        self._graph.insert_vertex(
            Vertex(frame=frame.index, index=proposal.index, proposal=proposal, embedding=embedding)
        )
        return self._graph.select_best_path(self.path_weight)

    def _prune_recent(self) -> None:
        if self._graph.frame_count == 0:
            return
        oldest = self._graph.latest_frame - self._graph.frame_count + 1
        for idx in [i for i in self._recent if i < oldest]:
            del self._recent[idx]


class SalientObjectDiscovery(BaseEstimator):
    """Unsupervised most-salient-object discovery over an image sequence.

    Parameters
    ----------
    window : frames kept in the correspondence graph (>= 2).
    keep_max : proposals kept per frame after suppression.
    nms_iou : overlap above which a lower-priority proposal is suppressed.
    gate : minimum cosine similarity for a cross-frame match.
    path_weight : weight of edge similarities in the path score.
    ncc_peak_gate : minimum correlation peak for a predicted box.
    passes : raster scans of the barrier-distance transform.
    pre_nms_cap : most-confident proposals considered per frame.
    min_component_area : smallest mask component turned into a fallback proposal.
    proposals : manifest path (or parsed manifest) with external proposals;
        None generates fallback proposals from the saliency mask.
    embeddings : directory of per-frame embedding files; None uses the
        built-in descriptor.

    Examples
    --------
    >>> import numpy as np
    >>> frames = np.zeros((4, 48, 48, 3)); frames[:, 10:30, 8:28] = 0.9
    >>> records = SalientObjectDiscovery().predict(list(frames))
    >>> records[-1].box.as_tuple()
    (8, 10, 20, 20)
    """

    def __init__(
        self,
        window: int = DEFAULT_WINDOW,
        keep_max: int = DEFAULT_KEEP_MAX,
        nms_iou: float = DEFAULT_NMS_IOU,
        gate: float = DEFAULT_GATE,
        path_weight: float = DEFAULT_PATH_WEIGHT,
        ncc_peak_gate: float = DEFAULT_PEAK_GATE,
        passes: int = DEFAULT_PASSES,
        pre_nms_cap: int = DEFAULT_PRE_NMS_CAP,
        min_component_area: int = MIN_COMPONENT_AREA,
        proposals: str | Path | ProposalManifest | None = None,
        embeddings: str | Path | None = None,
    ):
        self.window = window
        self.keep_max = keep_max
        self.nms_iou = nms_iou
        self.gate = gate
        self.path_weight = path_weight
        self.ncc_peak_gate = ncc_peak_gate
        self.passes = passes
        self.pre_nms_cap = pre_nms_cap
        self.min_component_area = min_component_area
        self.proposals = proposals
        self.embeddings = embeddings

    def fit(self, X=None, y=None):
        """No-op beyond parameter validation; discovery needs no training."""
        self.session()
        self.is_fitted_ = True
        return self

    def session(self) -> DiscoverySession:
        """Open a fresh streaming session with this estimator's parameters."""
        manifest = self.proposals
        if manifest is not None and not isinstance(manifest, ProposalManifest):
            manifest = ProposalManifest.load(manifest)
        return DiscoverySession(
            window=self.window,
            keep_max=self.keep_max,
            nms_iou=self.nms_iou,
            gate=self.gate,
            path_weight=self.path_weight,
            ncc_peak_gate=self.ncc_peak_gate,
            passes=self.passes,
            pre_nms_cap=self.pre_nms_cap,
            min_component_area=self.min_component_area,
            manifest=manifest,
            embedding_dir=self.embeddings,
        )

    def predict(self, X: Iterable) -> list[DetectionRecord]:
        """One detection record per frame of the sequence `X`.

        `X` is an iterable of `Frame` values or (h, w, 3) float arrays in
        [0, 1]; arrays are indexed in arrival order.
        """
        session = self.session()
        return [session.process_frame(frame) for frame in as_frames(X)]

    def stream(self, X: Iterable) -> Iterator[DetectionRecord]:
        """Like `predict`, but yields records as frames arrive."""
        session = self.session()
        for frame in as_frames(X):
            yield session.process_frame(frame)
