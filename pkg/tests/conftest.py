import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pvqa import FeatureMap, Rating, SubjectScoreTable, VideoRecord


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


def rating_panel(n_subjects=48, n_videos=120, noise=2.5, seed=3, adversaries=None):
    """Simulated study: consistent raters around a per-video true quality in
    [5, 95], plus planted adversaries ("random" or "inverted" style)."""
    adversaries = adversaries or {}
    rng = np.random.default_rng(seed)
    true_q = np.linspace(5, 95, n_videos)
    ratings = []
    for s in range(n_subjects):
        name = f"subj{s:02d}"
        style = adversaries.get(name)
        for v in range(n_videos):
            session = 1 + v % 2  # interleave qualities across sessions
            if style == "inverted":
                raw = 100.0 - true_q[v] + noise * rng.standard_normal()
            elif style == "random":
                raw = rng.uniform(0, 100)
            else:
                raw = true_q[v] + noise * rng.standard_normal()
            ratings.append(Rating(name, session, f"vid{v:03d}",
                                  float(np.clip(raw, 0, 100))))
    return SubjectScoreTable(ratings=tuple(ratings))


def random_frame(rng, h=24, w=24):
    return rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)


def random_map(rng, h=4, w=4, k=8):
    return FeatureMap(rng.standard_normal((h, w, k)).astype(np.float32))


def make_video(frames, n_context=2, mos=None, video_id="vid"):
    frames = np.asarray(frames, dtype=np.uint8)
    return VideoRecord(
        id=video_id,
        frames=frames,
        n_context=n_context,
        n_predicted=frames.shape[0] - n_context,
        dataset="synthetic",
        mos=mos,
    )
