import numpy as np
import pytest

from objscout.exceptions import (
    InsufficientHistoryError,
    TemplateLargerThanRegionError,
)
from objscout.geometry import BoundingBox
from objscout.graph import TrackPath, Vertex
from objscout.proposals import ObjectProposal
from objscout.saliency import SaliencyMap
from objscout.template import (
    Template,
    build_template,
    inflate_box,
    ncc_search,
    predict_proposal,
)

from helpers import gray_frame


def planted_frame(patch, y, x, size=48, background=None, seed=0, index=0):
    """Gray frame with `patch` written at (row y, col x)."""
    if background is None:
        rng = np.random.default_rng(seed)
        img = rng.uniform(0.0, 0.45, size=(size, size))
    else:
        img = np.full((size, size), float(background))
    img[y : y + patch.shape[0], x : x + patch.shape[1]] = patch
    return gray_frame(img, index)


def path_over(frames, boxes, objectness=0.8):
    vertices = tuple(
        Vertex(
            frame=frame.index,
            index=0,
            proposal=ObjectProposal(box=box, objectness=objectness, index=0),
            embedding=np.ones(1),
        )
        for frame, box in zip(frames, boxes)
    )
    return TrackPath(vertices, tuple(0.9 for _ in vertices[1:]))


def trivial_smap(size=48):
    return SaliencyMap(
        values=np.zeros((size, size)),
        mask=np.zeros((size, size), dtype=bool),
        threshold=1.0,
    )


class TestBuildTemplate:
    def test_identical_crops_average_to_the_crop(self):
        rng = np.random.default_rng(2)
        patch = rng.uniform(0.5, 1.0, size=(10, 12))
        frames = [planted_frame(patch, 5, 7, background=0.1, index=i) for i in range(3)]
        boxes = [BoundingBox(7, 5, 12, 10)] * 3
        template = build_template({f.index: f for f in frames}, path_over(frames, boxes))
        assert template.support == 3
        assert np.allclose(template.patch, frames[0].luma[5:15, 7:19])

    def test_two_crops_pixelwise_mean(self):
        frames = [
            planted_frame(np.full((6, 6), 0.2), 4, 4, background=0.2, index=0),
            planted_frame(np.full((6, 6), 0.6), 4, 4, background=0.6, index=1),
        ]
        boxes = [BoundingBox(4, 4, 6, 6)] * 2
        template = build_template({f.index: f for f in frames}, path_over(frames, boxes))
        assert template.support == 2
        assert np.allclose(template.patch, 0.4)

    def test_singleton_path_rejected(self):
        frame = planted_frame(np.full((6, 6), 0.5), 4, 4, background=0.1)
        path = path_over([frame], [BoundingBox(4, 4, 6, 6)])
        with pytest.raises(InsufficientHistoryError):
            build_template({frame.index: frame}, path)

    def test_uses_last_three_vertices(self):
        frames = [
            planted_frame(np.full((6, 6), v), 4, 4, background=v, index=i)
            for i, v in enumerate([0.9, 0.1, 0.2, 0.3])
        ]
        boxes = [BoundingBox(4, 4, 6, 6)] * 4
        template = build_template({f.index: f for f in frames}, path_over(frames, boxes))
        assert template.support == 3
        assert np.allclose(template.patch, (0.1 + 0.2 + 0.3) / 3)

    def test_resizes_older_crops_to_latest_box(self):
        frames = [
            planted_frame(np.full((8, 8), 0.5), 2, 2, background=0.5, index=0),
            planted_frame(np.full((4, 4), 0.5), 2, 2, background=0.5, index=1),
        ]
        boxes = [BoundingBox(2, 2, 8, 8), BoundingBox(2, 2, 4, 4)]
        template = build_template({f.index: f for f in frames}, path_over(frames, boxes))
        assert template.patch.shape == (4, 4)

    def test_missing_frame_rejected(self):
        frames = [
            planted_frame(np.full((6, 6), 0.5), 4, 4, background=0.1, index=i)
            for i in range(2)
        ]
        path = path_over(frames, [BoundingBox(4, 4, 6, 6)] * 2)
        with pytest.raises(InsufficientHistoryError):
            build_template({1: frames[1]}, path)


class TestNccSearch:
    def test_exact_copy_found_with_unit_peak(self):
        rng = np.random.default_rng(4)
        patch = rng.random((8, 6))
        frame = planted_frame(patch, 7, 12, size=40, seed=9)
        template = Template(patch=patch, support=2)
        box, peak = ncc_search(template, frame, BoundingBox(0, 0, 40, 40))
        assert (box.x, box.y, box.w, box.h) == (12, 7, 6, 8)
        assert peak == pytest.approx(1.0, abs=1e-6)

    def test_negated_copy_scores_minus_one(self):
        rng = np.random.default_rng(4)
        patch = rng.random((8, 6))
        frame = planted_frame(1.0 - patch, 7, 12, size=40, background=0.5)
        template = Template(patch=patch, support=2)
        # restrict the search to the planted spot: the only non-flat window
        found = ncc_search(template, frame, BoundingBox(12, 7, 6, 8))
        assert found is not None
        _, peak = found
        assert peak == pytest.approx(-1.0, abs=1e-6)

    def test_constant_frame_returns_none(self):
        rng = np.random.default_rng(4)
        template = Template(patch=rng.random((5, 5)), support=2)
        frame = gray_frame(np.full((30, 30), 0.5))
        assert ncc_search(template, frame, BoundingBox(0, 0, 30, 30)) is None

    def test_flat_template_returns_none(self):
        template = Template(patch=np.full((5, 5), 0.3), support=2)
        frame = planted_frame(np.random.default_rng(0).random((5, 5)), 4, 4, size=20)
        assert ncc_search(template, frame, BoundingBox(0, 0, 20, 20)) is None

    def test_template_larger_than_region(self):
        template = Template(patch=np.random.default_rng(0).random((10, 10)), support=2)
        frame = gray_frame(np.random.default_rng(1).random((30, 30)))
        with pytest.raises(TemplateLargerThanRegionError):
            ncc_search(template, frame, BoundingBox(0, 0, 8, 8))

    def test_region_outside_frame_rejected(self):
        template = Template(patch=np.random.default_rng(0).random((4, 4)), support=2)
        frame = gray_frame(np.random.default_rng(1).random((20, 20)))
        with pytest.raises(ValueError):
            ncc_search(template, frame, BoundingBox(10, 10, 20, 20))

    def test_affine_intensity_invariance(self):
        rng = np.random.default_rng(13)
        patch = rng.random((7, 9))
        base = rng.uniform(0.0, 0.5, size=(36, 36))
        base[10:17, 4:13] = patch
        frame_a = gray_frame(base)
        frame_b = gray_frame(0.5 * base + 0.2)
        template = Template(patch=patch, support=2)
        search = BoundingBox(0, 0, 36, 36)
        box_a, peak_a = ncc_search(template, frame_a, search)
        box_b, peak_b = ncc_search(template, frame_b, search)
        assert box_a == box_b
        assert peak_a == pytest.approx(peak_b, abs=1e-6)

    def test_peak_always_bounded(self):
        rng = np.random.default_rng(21)
        for _ in range(20):
            template = Template(patch=rng.random((4, 5)), support=2)
            frame = gray_frame(rng.random((18, 18)))
            found = ncc_search(template, frame, BoundingBox(0, 0, 18, 18))
            assert found is not None
            assert -1.0 <= found[1] <= 1.0

    def test_restricted_region_matches_global_peak(self):
        rng = np.random.default_rng(30)
        for trial in range(15):
            patch = rng.random((6, 6))
            y, x = int(rng.integers(8, 20)), int(rng.integers(8, 20))
            frame = planted_frame(patch, y, x, size=36, seed=100 + trial)
            template = Template(patch=patch, support=2)
            whole, _ = ncc_search(template, frame, BoundingBox(0, 0, 36, 36))
            region = BoundingBox(x - 4, y - 4, 14, 14)
            restricted, _ = ncc_search(template, frame, region)
            assert whole == restricted


class TestInflateBox:
    def test_doubles_size_in_the_open(self):
        frame = gray_frame(np.zeros((100, 100)))
        grown = inflate_box(BoundingBox(40, 40, 10, 8), frame)
        assert grown == BoundingBox(35, 36, 20, 16)

    def test_clips_at_border(self):
        frame = gray_frame(np.zeros((20, 20)))
        grown = inflate_box(BoundingBox(0, 0, 10, 10), frame)
        assert grown == BoundingBox(0, 0, 15, 15)


class TestPredictProposal:
    def _setup(self, shift=3, seed=5):
        rng = np.random.default_rng(seed)
        patch = rng.uniform(0.4, 1.0, size=(10, 10))
        last_box = BoundingBox(14, 12, 10, 10)
        frame = planted_frame(patch, 12 + shift, 14 + shift, size=48, seed=seed + 1, index=1)
        return Template(patch=patch, support=2), frame, last_box

    def test_recovers_moved_object(self):
        template, frame, last_box = self._setup(shift=3)
        prop = predict_proposal(template, frame, last_box, trivial_smap())
        assert prop is not None
        assert prop.box == BoundingBox(17, 15, 10, 10)
        assert prop.source == "predicted"

    def test_agrees_with_whole_frame_search(self):
        template, frame, last_box = self._setup(shift=4)
        prop = predict_proposal(template, frame, last_box, trivial_smap())
        whole, _ = ncc_search(template, frame, BoundingBox(0, 0, 48, 48))
        assert prop.box == whole

    def test_unit_peak_gives_decayed_objectness(self):
        template, frame, last_box = self._setup(shift=0)
        prop = predict_proposal(template, frame, last_box, trivial_smap())
        assert prop.objectness == pytest.approx(0.8, abs=1e-6)

    def test_absent_object_below_gate_returns_none(self):
        rng = np.random.default_rng(6)
        template = Template(patch=rng.uniform(0.4, 1.0, size=(10, 10)), support=2)
        frame = gray_frame(rng.uniform(0.0, 0.2, size=(48, 48)))
        prop = predict_proposal(template, frame, BoundingBox(14, 12, 10, 10), trivial_smap(), peak_gate=0.9)
        assert prop is None

    def test_saliency_rescored_against_mask(self):
        template, frame, last_box = self._setup(shift=0)
        mask = np.ones((48, 48), dtype=bool)
        smap = SaliencyMap(values=mask.astype(float), mask=mask, threshold=0.5)
        prop = predict_proposal(template, frame, last_box, smap)
        assert prop.saliency == 1.0

    def test_box_always_inside_frame(self):
        rng = np.random.default_rng(9)
        for trial in range(20):
            patch = rng.uniform(0.3, 1.0, size=(8, 8))
            x = int(rng.integers(0, 40))
            y = int(rng.integers(0, 40))
            frame = planted_frame(patch, y, x, size=48, seed=50 + trial)
            template = Template(patch=patch, support=2)
            last = BoundingBox(
                min(max(x - 2, 0), 40), min(max(y - 2, 0), 40), 8, 8
            )
            prop = predict_proposal(template, frame, last, trivial_smap())
            if prop is not None:
                b = prop.box
                assert 0 <= b.x and 0 <= b.y and b.x2 <= 48 and b.y2 <= 48
