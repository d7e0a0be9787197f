"""Small builders shared across test modules."""

from __future__ import annotations

import numpy as np

from objscout.geometry import BoundingBox, Frame
from objscout.graph import CorrespondenceGraph, Vertex
from objscout.proposals import ObjectProposal


def rgb_frame(rgb, index: int = 0) -> Frame:
    return Frame.from_rgb(np.asarray(rgb, dtype=np.float64), index)


def gray_frame(gray, index: int = 0) -> Frame:
    gray = np.asarray(gray, dtype=np.float64)
    return rgb_frame(np.stack([gray, gray, gray], axis=-1), index)


def make_proposal(
    x=0, y=0, w=10, h=10, objectness=0.5, saliency=0.0, source="external", index=0
) -> ObjectProposal:
    return ObjectProposal(
        box=BoundingBox(x, y, w, h),
        objectness=objectness,
        saliency=saliency,
        source=source,
        index=index,
    )


def make_vertex(frame: int, index: int, objectness: float, embedding) -> Vertex:
    return Vertex(
        frame=frame,
        index=index,
        proposal=make_proposal(objectness=objectness, index=index),
        embedding=np.asarray(embedding, dtype=np.float64),
    )


def random_graph(
    rng: np.random.Generator,
    n_frames: int,
    max_vertices: int,
    window: int | None = None,
    gate: float = 0.0,
    dim: int = 6,
) -> CorrespondenceGraph:
    """A graph built through the public update path with random content."""
    graph = CorrespondenceGraph(window=window or max(2, n_frames), gate=gate)
    for f in range(n_frames):
        count = int(rng.integers(0, max_vertices + 1))
        vertices = [
            make_vertex(f, i, float(rng.uniform(0.0, 1.0)), rng.normal(size=dim))
            for i in range(count)
        ]
        graph.update(f, vertices)
    return graph
