"""Sliding-window correspondence graph over proposal vertices.

Vertices are per-frame proposals with embeddings; edges join adjacent
frames through an optimal one-to-one assignment on cosine similarity.
Because every frame pair carries a matching, maximal chains of matched
vertices are vertex-disjoint, and the discovered object is simply the
chain with the highest combined objectness-plus-similarity score.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .exceptions import EmptyPathError, NonContiguousFrameError
from .features import similarity_matrix
from .proposals import ObjectProposal

DEFAULT_WINDOW = 5
DEFAULT_GATE = 0.4
DEFAULT_PATH_WEIGHT = 1.0

_FORBIDDEN = -1e9


@dataclass(frozen=True)
class Vertex:
    """One proposal lifted into the graph; (frame, index) identifies it."""

    frame: int
    index: int
    proposal: ObjectProposal
    embedding: np.ndarray

    @property
    def id(self) -> tuple[int, int]:
        return self.frame, self.index


@dataclass(frozen=True)
class Edge:
    """Match between vertex `src` of `frame` and vertex `dst` of `frame`+1."""

    frame: int
    src: int
    dst: int
    weight: float


@dataclass(frozen=True)
class TrackPath:
    """Chain of matched vertices on consecutive frames."""

    vertices: tuple[Vertex, ...]
    edge_weights: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def last(self) -> Vertex:
        if not self.vertices:
            raise EmptyPathError("track path has no vertices")
        return self.vertices[-1]


def path_score(path: TrackPath, path_weight: float = DEFAULT_PATH_WEIGHT) -> float:
    """Sum of vertex objectness plus `path_weight` times the edge weights."""
    vertex_term = sum(v.proposal.objectness for v in path.vertices)
    edge_term = sum(path.edge_weights)
    return vertex_term + path_weight * edge_term


def emit_detection(path: TrackPath) -> ObjectProposal:
    """The proposal of the chain's most recent vertex."""
    return path.last.proposal


def solve_matching(sim: np.ndarray, gate: float) -> list[tuple[int, int]]:
    """Maximum-total-similarity one-to-one matching on a similarity matrix.

    Pairs below `gate` are forbidden and either side may stay unmatched,
    so the problem is padded to a square assignment with zero-weight dummy
    partners. Pairs whose similarity is not strictly positive never help
    the total and are left unmatched, which keeps ties deterministic.
    """
    sim = np.atleast_2d(np.asarray(sim, dtype=np.float64))
    n, m = sim.shape
    if n == 0 or m == 0:
        return []
    allowed = sim >= gate
    size = n + m
    weights = np.zeros((size, size))
    weights[:n, :m] = np.where(allowed, sim, _FORBIDDEN)
    rows, cols = linear_sum_assignment(weights, maximize=True)
    pairs = [
        (int(i), int(j))
        for i, j in zip(rows, cols)
        if i < n and j < m and allowed[i, j] and sim[i, j] > 0.0
    ]
    pairs.sort()
    return pairs


def match_frames(
    prev: Sequence[Vertex], nxt: Sequence[Vertex], gate: float = DEFAULT_GATE
) -> list[Edge]:
    """Edges of the optimal assignment between two adjacent vertex sets."""
    if not prev or not nxt:
        return []
    sim = similarity_matrix(
        np.stack([v.embedding for v in prev]),
        np.stack([v.embedding for v in nxt]),
    )
    frame = prev[0].frame
    return [
        Edge(frame=frame, src=prev[i].index, dst=nxt[j].index, weight=float(sim[i, j]))
        for i, j in solve_matching(sim, gate)
    ]


class CorrespondenceGraph:
    """Stateful window of the most recent frames' vertices and matchings.

    Single-owner: update/select must be called sequentially from one
    execution context.
    """

    def __init__(self, window: int = DEFAULT_WINDOW, gate: float = DEFAULT_GATE):
        if window < 2:
            raise ValueError(f"window must be >= 2, got {window}")
        self.window = window
        self.gate = gate
        self._frames: list[tuple[int, list[Vertex]]] = []
        self._edges: dict[int, list[Edge]] = {}

    @property
    def latest_frame(self) -> int | None:
        return self._frames[-1][0] if self._frames else None

    @property
    def frame_count(self) -> int:
        return len(self._frames)

    def vertex_count(self) -> int:
        return sum(len(verts) for _, verts in self._frames)

    def vertices_of(self, frame_index: int) -> list[Vertex]:
        for idx, verts in self._frames:
            if idx == frame_index:
                return list(verts)
        raise KeyError(f"frame {frame_index} is not in the window")

    def edges_between(self, frame_index: int) -> list[Edge]:
        """Edges joining `frame_index` to `frame_index`+1."""
        return list(self._edges.get(frame_index, []))

    def update(self, frame_index: int, vertices: Sequence[Vertex]) -> None:
        """Append a frame, match it against the previous one, evict the oldest."""
        latest = self.latest_frame
        if latest is not None and frame_index != latest + 1:
            raise NonContiguousFrameError(
                f"expected frame {latest + 1}, got {frame_index}"
            )
        for v in vertices:
            if v.frame != frame_index:
                raise NonContiguousFrameError(
                    f"vertex {v.id} does not belong to frame {frame_index}"
                )
        self._frames.append((frame_index, list(vertices)))
        if len(self._frames) >= 2:
            prev = self._frames[-2][1]
            self._edges[frame_index - 1] = match_frames(prev, vertices, self.gate)
        if len(self._frames) > self.window:
            oldest, _ = self._frames.pop(0)
            self._edges.pop(oldest, None)

    def insert_vertex(self, vertex: Vertex) -> None:
        """Add one vertex to the latest frame and redo that pair's matching."""
        if not self._frames or vertex.frame != self._frames[-1][0]:
            raise NonContiguousFrameError(
                f"vertex {vertex.id} does not belong to the latest frame"
            )
        self._frames[-1][1].append(vertex)
        if len(self._frames) >= 2:
            prev = self._frames[-2][1]
            self._edges[vertex.frame - 1] = match_frames(
                prev, self._frames[-1][1], self.gate
            )

    def _successor_map(self) -> tuple[dict, set]:
        nxt: dict[tuple[int, int], Edge] = {}
        has_incoming: set[tuple[int, int]] = set()
        for frame, edges in self._edges.items():
            for e in edges:
                nxt[(frame, e.src)] = e
                has_incoming.add((frame + 1, e.dst))
        return nxt, has_incoming

    def chains(self) -> list[TrackPath]:
        """All maximal chains; they partition the window's matched vertices."""
        nxt, has_incoming = self._successor_map()
        lookup = {
            (frame, v.index): v for frame, verts in self._frames for v in verts
        }
        out: list[TrackPath] = []
        for frame, verts in self._frames:
            for v in verts:
                if (frame, v.index) in has_incoming:
                    continue
                chain = [v]
                weights: list[float] = []
                cur = v
                while (cur.frame, cur.index) in nxt:
                    edge = nxt[(cur.frame, cur.index)]
                    cur = lookup[(cur.frame + 1, edge.dst)]
                    weights.append(edge.weight)
                    chain.append(cur)
                out.append(TrackPath(tuple(chain), tuple(weights)))
        return out

    def select_best_path(
        self, path_weight: float = DEFAULT_PATH_WEIGHT
    ) -> TrackPath | None:
        """The maximal chain with the highest score, or None on an empty graph.

        Ties go to the longer chain, then to the lower first-vertex id.
        """
        best: TrackPath | None = None
        best_key: tuple | None = None
        for chain in self.chains():
            key = (-path_score(chain, path_weight), -len(chain), chain.vertices[0].id)
            if best_key is None or key < best_key:
                best, best_key = chain, key
        return best
