import numpy as np
import pytest

from pvqa import (
    DataValidationError,
    FormatError,
    ProviderSource,
    PvqfCacheSource,
    SyntheticProvider,
    assemble_features,
    assemble_mcs_rfd,
    load_model,
    predict,
    save_model,
    srocc,
    train,
    write_feature_file,
)
from pvqa.model import FEATURE_SETS
from pvqa.synthetic import make_planted_records

from conftest import make_video, random_frame


@pytest.fixture
def provider():
    return SyntheticProvider(seed=7, k=8, downscale=4)


def small_records(n=12, seed=0, noise_sigma=0.0):
    return make_planted_records(
        n, seed=seed, n_context=2, n_predicted=4, size=24, noise_sigma=noise_sigma
    )


EXPECTED_LENGTHS = {
    # k=8, n=6 frames, n_predicted=4
    "mcs": 8 * 4,
    "rfd": 8 * 5,
    "ssa": 8 * 6,
    "mcs+rfd": 8 * (4 + 5),
    "ssa+rfd": 8 * (6 + 5),
}


class TestAssembleFeatures:
    def test_length_contracts(self, rng, provider):
        frames = np.stack([random_frame(rng, 16, 16) for _ in range(6)])
        video = make_video(frames, n_context=2)
        for feature_set in FEATURE_SETS:
            vec = assemble_features(video, provider, feature_set)
            assert vec.shape == (EXPECTED_LENGTHS[feature_set],), feature_set

    def test_static_video_mcs_ones_rfd_zeros(self, rng, provider):
        frame = random_frame(rng, 16, 16)
        video = make_video(np.stack([frame] * 6), n_context=2)
        assembly = assemble_mcs_rfd(video, provider)
        # all ones except channels whose plane died under ReLU (0 by the
        # zero-vector convention)
        ref_map = provider.features_for_image(frame)
        dead = np.linalg.norm(
            ref_map.values.reshape(-1, ref_map.k).astype(np.float64), axis=0
        ) == 0.0
        per_frame = assembly.mcs.values.reshape(video.n_predicted, ref_map.k)
        assert np.allclose(per_frame[:, ~dead], 1.0, atol=1e-6)
        assert np.all(per_frame[:, dead] == 0.0)
        assert np.all(assembly.rfd.values == 0.0)
        assert np.array_equal(
            assembly.combined,
            np.concatenate([assembly.mcs.values, assembly.rfd.values]),
        )

    def test_unknown_feature_set(self, rng, provider):
        video = make_video(np.stack([random_frame(rng, 16, 16)] * 4), n_context=2)
        with pytest.raises(DataValidationError):
            assemble_features(video, provider, "mcs+ssa")

    def test_cache_source_matches_provider_source(self, rng, provider, tmp_path):
        frames = np.stack([random_frame(rng, 16, 16) for _ in range(5)])
        video = make_video(frames, n_context=2, video_id="v9")
        live = ProviderSource(provider)
        vf = live.video_features(video)
        write_feature_file(vf.frame_maps, tmp_path / "v9.frames.pvqf")
        write_feature_file(vf.rfd_maps, tmp_path / "v9.rfd.pvqf")
        cached = PvqfCacheSource(tmp_path)
        for feature_set in FEATURE_SETS:
            a = assemble_features(video, live, feature_set)
            b = assemble_features(video, cached, feature_set)
            assert np.array_equal(a, b), feature_set


class TestTrainPredict:
    def test_planted_training_fit(self, provider):
        # K' = n_train (rank-clamped), the same convention the benchmark
        # protocol uses; the planted linear signal is then fit essentially
        # exactly on the training set
        records = small_records(n=14)
        ids = [r.id for r in records]
        with pytest.warns(UserWarning, match="clamped"):
            qm = train(records, ids, provider, k_prime=14, feature_set="mcs+rfd")
        preds = [predict(qm, r, provider) for r in records]
        mos = [r.mos for r in records]
        assert srocc(preds, mos) >= 0.99

    def test_interpolating_model_recovers_mos(self, provider):
        records = small_records(n=10)
        ids = [r.id for r in records]
        # k' = n-1 on consistent-system regime: training videos reproduced
        qm = train(records, ids, provider, k_prime=9, feature_set="mcs+rfd")
        for r in records[:3]:
            assert predict(qm, r, provider) == pytest.approx(r.mos, abs=1e-3)

    def test_rank_clamp_warning(self, provider):
        records = small_records(n=8)
        ids = [r.id for r in records]
        with pytest.warns(UserWarning, match="clamped"):
            qm = train(records, ids, provider, k_prime=8)
        assert qm.pca.k_prime == 7

    def test_deterministic_predictions(self, provider):
        records = small_records(n=8)
        ids = [r.id for r in records]
        qm = train(records, ids, provider, k_prime=5)
        twin = records[3]
        assert predict(qm, twin, provider) == predict(qm, twin, provider)

    def test_row_order_invariance(self, provider):
        records = small_records(n=10)
        ids = [r.id for r in records]
        qm1 = train(records, ids, provider, k_prime=6)
        qm2 = train(records, list(reversed(ids)), provider, k_prime=6)
        for r in records:
            a = predict(qm1, r, provider)
            b = predict(qm2, r, provider)
            assert a == pytest.approx(b, abs=1e-9)

    def test_small_perturbation_small_score_change(self, provider):
        records = small_records(n=10)
        ids = [r.id for r in records]
        qm = train(records, ids, provider, k_prime=6)
        target = records[5]
        base = predict(qm, target, provider)
        bumped_frames = target.frames.copy()
        bumped_frames[3, 10, 10, 1] = min(255, int(bumped_frames[3, 10, 10, 1]) + 1)
        bumped = make_video(bumped_frames, n_context=2, mos=target.mos,
                            video_id=target.id)
        assert abs(predict(qm, bumped, provider) - base) < 1.0

    def test_missing_mos_rejected(self, rng, provider):
        frames = np.stack([random_frame(rng, 16, 16) for _ in range(4)])
        records = [make_video(frames, n_context=2, video_id=f"v{i}")
                   for i in range(3)]
        with pytest.raises(DataValidationError, match="MOS"):
            train(records, [r.id for r in records], provider, k_prime=2)

    def test_config_mismatch_on_predict(self, rng, provider):
        records = small_records(n=8)
        qm = train(records, [r.id for r in records], provider, k_prime=5)
        frames = np.stack([random_frame(rng, 16, 16) for _ in range(8)])
        other = make_video(frames, n_context=4, video_id="other")
        with pytest.raises(DataValidationError, match="frame counts"):
            predict(qm, other, provider)


class TestPersistence:
    def test_round_trip_bit_exact(self, provider, tmp_path):
        records = small_records(n=8)
        qm = train(records, [r.id for r in records], provider, k_prime=5)
        path = tmp_path / "model.pvqm"
        save_model(qm, path)
        loaded = load_model(path)
        assert np.array_equal(loaded.pca.mean, qm.pca.mean)
        assert np.array_equal(loaded.pca.basis, qm.pca.basis)
        assert np.array_equal(loaded.reg.weights, qm.reg.weights)
        assert loaded.reg.intercept == qm.reg.intercept
        assert loaded.feature_config == qm.feature_config
        assert loaded.backbone == qm.backbone
        for r in records[:3]:
            assert predict(loaded, r, provider) == predict(qm, r, provider)

    def test_corruption_detected(self, provider, tmp_path):
        records = small_records(n=8)
        qm = train(records, [r.id for r in records], provider, k_prime=4)
        path = tmp_path / "model.pvqm"
        save_model(qm, path)
        blob = bytearray(path.read_bytes())
        blob[len(blob) // 2] ^= 0xFF
        path.write_bytes(bytes(blob))
        with pytest.raises(FormatError, match="checksum"):
            load_model(path)

    def test_version_mismatch(self, provider, tmp_path):
        records = small_records(n=8)
        qm = train(records, [r.id for r in records], provider, k_prime=4)
        path = tmp_path / "model.pvqm"
        save_model(qm, path)
        blob = bytearray(path.read_bytes())
        blob[4] = 99
        path.write_bytes(bytes(blob))
        with pytest.raises(FormatError, match="version"):
            load_model(path)
