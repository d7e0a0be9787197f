import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image

from objscout.exceptions import EmptyImageError, ZeroPassesError
from objscout.saliency import (
    SaliencyMap,
    binarize,
    compute_saliency,
    mbd_transform,
    normalize_saliency,
    save_saliency_png,
)

from oracles import exact_mbd, otsu_sweep_threshold

# intensities on a coarse binary-fraction grid keep +c shifts exact in floats
GRID = np.linspace(0.0, 1.0, 9)


def random_grid_image(rng, h, w):
    return rng.choice(GRID, size=(h, w))


class TestMbdTransform:
    def test_constant_image_is_zero(self):
        assert np.all(mbd_transform(np.full((5, 7), 0.4)) == 0.0)

    def test_border_pixels_are_seeds(self):
        rng = np.random.default_rng(1)
        d = mbd_transform(rng.random((6, 8)), 3)
        assert np.all(d[0, :] == 0.0)
        assert np.all(d[-1, :] == 0.0)
        assert np.all(d[:, 0] == 0.0)
        assert np.all(d[:, -1] == 0.0)

    def test_three_by_three_worked_example(self):
        img = np.full((3, 3), 0.1)
        img[1, 1] = 0.9
        d = mbd_transform(img, 3)
        expected = np.zeros((3, 3))
        expected[1, 1] = 0.8
        assert np.array_equal(d, expected)
        # the raster scan is exact on this image
        assert np.array_equal(d, exact_mbd(img))

    def test_zero_passes_rejected(self):
        with pytest.raises(ZeroPassesError):
            mbd_transform(np.zeros((3, 3)), 0)

    def test_empty_image_rejected(self):
        with pytest.raises(EmptyImageError):
            mbd_transform(np.zeros((0, 3)))
        with pytest.raises(EmptyImageError):
            mbd_transform(np.zeros(5))

    def test_upper_bounds_exact_distance(self):
        rng = np.random.default_rng(7)
        for _ in range(40):
            img = random_grid_image(rng, 3, 4)
            assert np.all(mbd_transform(img, 3) >= exact_mbd(img))

    def test_upper_bound_on_larger_grids(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            img = random_grid_image(rng, 4, 5)
            assert np.all(mbd_transform(img, 3) >= exact_mbd(img))

    def test_more_passes_never_increase(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            img = rng.random((6, 7))
            results = [mbd_transform(img, k) for k in range(1, 5)]
            for shorter, longer in zip(results, results[1:]):
                assert np.all(longer <= shorter)

    @given(
        seed=st.integers(0, 10_000),
        h=st.integers(2, 6),
        w=st.integers(2, 6),
        shift_idx=st.integers(0, 4),
    )
    @settings(max_examples=60, deadline=None)
    def test_invariant_under_constant_shift(self, seed, h, w, shift_idx):
        rng = np.random.default_rng(seed)
        img = rng.choice(GRID[:5], size=(h, w))  # values <= 0.5
        c = GRID[shift_idx]  # shift <= 0.5 keeps intensities in [0, 1]
        assert np.array_equal(mbd_transform(img, 3), mbd_transform(img + c, 3))


class TestNormalize:
    def test_all_zero_passes_through(self):
        out = normalize_saliency(np.zeros((3, 3)))
        assert np.all(out == 0.0)

    def test_divides_by_max(self):
        out = normalize_saliency(np.array([[0.0, 0.4, 0.8]]))
        assert np.array_equal(out, [[0.0, 0.5, 1.0]])

    def test_idempotent_at_max_one(self):
        dmap = np.array([[0.0, 0.3, 1.0]])
        assert np.array_equal(normalize_saliency(dmap), dmap)

    def test_empty_rejected(self):
        with pytest.raises(EmptyImageError):
            normalize_saliency(np.zeros((0,)))


class TestBinarize:
    def test_constant_map_is_all_background(self):
        mask, threshold = binarize(np.full((4, 4), 0.6))
        assert threshold == 1.0
        assert not mask.any()

    def test_bimodal_selects_bright_half(self):
        values = np.array([[0.1, 0.9, 0.1, 0.9]])
        mask, threshold = binarize(values)
        assert np.array_equal(mask, [[False, True, False, True]])
        assert threshold == otsu_sweep_threshold(values)

    def test_zero_one_map(self):
        values = np.array([0.0, 0.0, 1.0, 1.0])
        mask, threshold = binarize(values)
        assert np.array_equal(mask, [False, False, True, True])
        assert threshold == otsu_sweep_threshold(values)

    def test_matches_sweep_oracle_on_random_maps(self):
        rng = np.random.default_rng(5)
        for _ in range(25):
            values = rng.random((6, 6))
            mask, threshold = binarize(values)
            assert threshold == otsu_sweep_threshold(values)
            assert np.array_equal(mask, values >= threshold)

    def test_mask_threshold_consistency(self):
        rng = np.random.default_rng(9)
        values = rng.random(200)
        mask, threshold = binarize(values)
        assert np.array_equal(mask, values >= threshold)

    def test_single_bin_nonconstant_is_background(self):
        mask, threshold = binarize(np.array([0.5001, 0.5002]))
        assert threshold == 1.0
        assert not mask.any()


class TestComputeSaliency:
    def test_bright_square_becomes_mask(self):
        img = np.full((20, 20), 0.1)
        img[5:15, 6:16] = 0.9
        smap = compute_saliency(img)
        assert isinstance(smap, SaliencyMap)
        assert (smap.width, smap.height) == (20, 20)
        assert smap.values.max() == 1.0
        assert smap.mask[10, 10]
        assert not smap.mask[0, 0]
        assert np.array_equal(smap.mask, smap.values >= smap.threshold)

    def test_png_dump_rounds_values(self, tmp_path):
        img = np.full((8, 8), 0.2)
        img[3:6, 3:6] = 0.7
        smap = compute_saliency(img)
        path = tmp_path / "saliency.png"
        save_saliency_png(smap, path)
        stored = np.asarray(Image.open(path))
        assert np.array_equal(stored, np.rint(smap.values * 255.0).astype(np.uint8))
