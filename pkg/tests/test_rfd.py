import numpy as np
import pytest

from pvqa import (
    DataValidationError,
    SyntheticProvider,
    rescaled_frame_difference,
    rfd_dissimilarity,
    rfd_images,
    rfd_video_features,
    ssa,
)
from pvqa.rfd import dump_rfd_images

from conftest import random_frame


class TestRescaledFrameDifference:
    def test_equal_frames_all_zero(self, rng):
        a = random_frame(rng)
        out = rescaled_frame_difference(a, a)
        assert np.all(out == 0)

    def test_affine_map_endpoints_and_midpoint(self):
        # one channel where D spans [-5, +5]: -5 -> 0, +5 -> 255, 0 -> 128
        a = np.zeros((1, 3, 3), np.uint8)
        b = np.zeros((1, 3, 3), np.uint8)
        a[0, :, 0] = [10, 5, 0]
        b[0, :, 0] = [5, 5, 5]  # D = [-5, 0, +5]
        out = rescaled_frame_difference(a, b)
        assert list(out[0, :, 0]) == [0, 128, 255]

    def test_min_zero_max_255_per_channel(self, rng):
        for _ in range(10):
            a = random_frame(rng, 16, 16)
            b = random_frame(rng, 16, 16)
            out = rescaled_frame_difference(a, b)
            d = b.astype(int) - a.astype(int)
            for c in range(3):
                if d[:, :, c].min() != d[:, :, c].max():
                    assert out[:, :, c].min() == 0
                    assert out[:, :, c].max() == 255

    def test_reversal_complement_within_rounding(self, rng):
        for _ in range(100):
            a = random_frame(rng, 8, 8)
            b = random_frame(rng, 8, 8)
            fwd = rescaled_frame_difference(a, b).astype(int)
            rev = rescaled_frame_difference(b, a).astype(int)
            d = b.astype(int) - a.astype(int)
            for c in range(3):
                if d[:, :, c].min() != d[:, :, c].max():
                    assert np.max(np.abs(rev[:, :, c] - (255 - fwd[:, :, c]))) <= 1

    def test_dimension_mismatch(self, rng):
        with pytest.raises(DataValidationError):
            rescaled_frame_difference(random_frame(rng, 8, 8),
                                      random_frame(rng, 8, 9))

    def test_rounding_half_up(self):
        # D in {0, 1, 2}: scaled = [0, 127.5, 255]; 127.5 rounds away from 0 to 128
        a = np.zeros((1, 3, 3), np.uint8)
        b = np.zeros((1, 3, 3), np.uint8)
        b[0, :, 0] = [0, 1, 2]
        out = rescaled_frame_difference(a, b)
        assert list(out[0, :, 0]) == [0, 128, 255]


class TestRfdVideoFeatures:
    def test_length_contract(self, rng):
        frames = np.stack([random_frame(rng, 12, 12) for _ in range(20)])
        provider = SyntheticProvider(7, 16, 3)
        vec = rfd_video_features(frames, provider)
        assert vec.values.shape == (16 * 19,)
        assert vec.n_diffs == 19

    def test_static_video_zero_features(self, rng):
        frame = random_frame(rng, 12, 12)
        frames = np.stack([frame] * 4)
        provider = SyntheticProvider(7, 8, 2)
        vec = rfd_video_features(frames, provider)
        assert np.all(vec.values == 0.0)

    def test_matches_manual_composition(self, rng):
        frames = np.stack([random_frame(rng, 12, 12) for _ in range(3)])
        provider = SyntheticProvider(7, 8, 2)
        vec = rfd_video_features(frames, provider)
        parts = []
        for t in range(2):
            img = rescaled_frame_difference(frames[t], frames[t + 1])
            parts.append(ssa(provider.features_for_image(img)))
        manual = np.concatenate(parts).astype(np.float32)
        assert np.array_equal(vec.values, manual)

    def test_needs_two_frames(self, rng):
        with pytest.raises(DataValidationError):
            rfd_images(np.stack([random_frame(rng)]))


class TestRfdDissimilarity:
    def test_identical_vectors(self):
        x = np.array([1.0, 2.0, 3.0])
        assert rfd_dissimilarity(x, x) == pytest.approx(0.0)

    def test_orthogonal_vectors(self):
        assert rfd_dissimilarity([1.0, 0.0], [0.0, 1.0]) == pytest.approx(1.0)


def test_dump_rfd_images(tmp_path, rng):
    frames = np.stack([random_frame(rng, 8, 8) for _ in range(3)])
    paths = dump_rfd_images(frames, tmp_path)
    assert len(paths) == 2
    assert all(p.exists() for p in paths)
