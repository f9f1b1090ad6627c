import numpy as np
import pytest

from pvqa import (
    DataValidationError,
    FeatureMap,
    FileFeatureProvider,
    OnnxProvider,
    ProviderUnavailableError,
    SyntheticProvider,
    ssa,
    write_feature_file,
)
from pvqa.providers import BACKBONES, RESNET50, _splitmix64

from conftest import random_frame, random_map
from reference import naive_ssa


class TestSsa:
    def test_constant_map(self):
        m = FeatureMap(np.full((3, 4, 5), 2.5, np.float32))
        assert np.allclose(ssa(m), 2.5)

    def test_two_cell_mean(self):
        values = np.zeros((2, 1, 1), np.float32)
        values[0, 0, 0] = 1.0
        values[1, 0, 0] = 3.0
        assert ssa(FeatureMap(values)) == pytest.approx([2.0])

    def test_matches_naive_double_loop(self, rng):
        m = random_map(rng, 7, 7, 2048)
        assert np.allclose(ssa(m), naive_ssa(m.values), rtol=1e-10, atol=1e-10)

    def test_linearity(self, rng):
        x = rng.standard_normal((5, 6, 7)).astype(np.float32)
        y = rng.standard_normal((5, 6, 7)).astype(np.float32)
        a, b = 2.5, -1.25
        lhs = ssa(FeatureMap(a * x + b * y))
        rhs = a * ssa(FeatureMap(x)) + b * ssa(FeatureMap(y))
        assert np.allclose(lhs, rhs, rtol=1e-6, atol=1e-6)


class TestSyntheticProvider:
    def test_deterministic(self, rng):
        frame = random_frame(rng, 64, 64)
        p1 = SyntheticProvider(seed=7, k=8, downscale=4)
        p2 = SyntheticProvider(seed=7, k=8, downscale=4)
        a = p1.features_for_image(frame)
        b = p1.features_for_image(frame)
        c = p2.features_for_image(frame)
        assert np.array_equal(a.values, b.values)
        assert np.array_equal(a.values, c.values)

    def test_seeds_differ(self, rng):
        frame = random_frame(rng, 16, 16)
        a = SyntheticProvider(1, 8, 2).features_for_image(frame)
        b = SyntheticProvider(2, 8, 2).features_for_image(frame)
        assert not np.array_equal(a.values, b.values)

    def test_zero_input_zero_features(self):
        frame = np.zeros((12, 12, 3), np.uint8)
        out = SyntheticProvider(3, 16, 3).features_for_image(frame)
        assert np.all(out.values == 0.0)

    def test_output_shape(self, rng):
        frame = random_frame(rng, 33, 21)
        out = SyntheticProvider(5, 6, 4).features_for_image(frame)
        assert out.shape == (33 // 4, 21 // 4, 6)

    def test_lipschitz_small_perturbation(self, rng):
        frame = random_frame(rng, 16, 16)
        bumped = frame.copy()
        bumped[3, 3, 0] = min(255, int(bumped[3, 3, 0]) + 1)
        p = SyntheticProvider(11, 8, 2)
        a = p.features_for_image(frame).values
        b = p.features_for_image(bumped).values
        assert np.max(np.abs(a - b)) < 0.05

    def test_splitmix64_known_sequence(self):
        # canonical splitmix64 outputs for state starting at 1
        state, z = _splitmix64(1)
        assert z == 0x910A2DEC89025CC1
        state, z = _splitmix64(state)
        assert z == 0xBEEB8DA1658EEC67


class TestFileFeatureProvider:
    def test_indexing_returns_stored_map(self, rng, tmp_path):
        maps = [random_map(rng, 2, 2, 4) for _ in range(20)]
        path = tmp_path / "f.pvqf"
        write_feature_file(maps, path)
        provider = FileFeatureProvider(path)
        assert len(provider) == 20
        assert np.array_equal(provider[3].values, maps[3].values)

    def test_spec_shape_mismatch(self, rng, tmp_path):
        maps = [random_map(rng, 2, 2, 512)]
        path = tmp_path / "f.pvqf"
        write_feature_file(maps, path)
        with pytest.raises(DataValidationError, match="k=512"):
            FileFeatureProvider(path, spec=RESNET50)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ProviderUnavailableError):
            FileFeatureProvider(tmp_path / "absent.pvqf")


class TestOnnxProvider:
    def test_unavailable_without_runtime_or_model(self, tmp_path):
        try:
            import onnxruntime  # noqa: F401
            pytest.skip("onnxruntime installed; missing-model path tested instead")
        except ImportError:
            pass
        with pytest.raises(ProviderUnavailableError):
            OnnxProvider(tmp_path / "model.onnx", BACKBONES["resnet50"])
