"""Seeded synthetic video generator with a planted quality signal.

Each video is a moving multi-scale texture (coarse, mid, and pixel-level
detail, so blur strips scales progressively) whose predicted frames are
degraded by a per-video blur strength b in [0, 1] that grows with prediction
depth, and the planted score is 100 - 60*b plus Gaussian noise.  Together
with the synthetic feature provider this gives a fully offline end-to-end
fixture for the training/benchmark pipeline.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy import ndimage

from .core import DatasetManifest, VideoEntry, VideoRecord, save_frame, save_manifest

MOS_INTERCEPT = 100.0
MOS_BLUR_SLOPE = 60.0

_MOTION_DIRECTIONS = ((1, 1), (1, -1), (-1, 1), (-1, -1))


def planted_video(
    seed: int,
    index: int,
    n_context: int = 4,
    n_predicted: int = 16,
    size: int = 48,
    noise_sigma: float = 3.0,
) -> VideoRecord:
    """One synthetic video; content, blur strength, and noise derive from
    (seed, index) only."""
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))
    n = n_context + n_predicted

    coarse = np.stack(
        [ndimage.gaussian_filter(rng.normal(size=(size, size)), 2.0, mode="wrap")
         for _ in range(3)], axis=2)
    mid = np.stack(
        [ndimage.gaussian_filter(rng.normal(size=(size, size)), 1.0, mode="wrap")
         for _ in range(3)], axis=2)
    fine = rng.normal(size=(size, size, 3))
    base = 6.0 * coarse + 2.0 * mid + fine
    base = (base - base.min()) / (base.max() - base.min()) * 235.0 + 10.0
    dy, dx = _MOTION_DIRECTIONS[int(rng.integers(0, 4))]

    blur = float(rng.uniform(0.0, 1.0))
    frames = np.empty((n, size, size, 3), dtype=np.uint8)
    for t in range(n):
        frame = np.roll(base, shift=(t * dy, t * dx), axis=(0, 1)).copy()
        if t >= n_context and blur > 0:
            depth = (t - n_context + 1) / n_predicted
            sigma = blur * (0.5 + 3.0 * depth)
            for c in range(3):
                frame[:, :, c] = ndimage.gaussian_filter(
                    frame[:, :, c], sigma=sigma, mode="wrap"
                )
        frames[t] = np.clip(np.round(frame), 0, 255).astype(np.uint8)

    mos = MOS_INTERCEPT - MOS_BLUR_SLOPE * blur + noise_sigma * rng.standard_normal()
    return VideoRecord(
        id=f"synth_{index:04d}",
        frames=frames,
        n_context=n_context,
        n_predicted=n_predicted,
        dataset="synthetic",
        predictor="planted_blur",
        distortion_tags=frozenset({"blur"}),
        is_stochastic_model=False,
        mos=float(np.clip(mos, 0.0, 100.0)),
    )


def make_planted_records(
    n_videos: int,
    seed: int,
    n_context: int = 4,
    n_predicted: int = 16,
    size: int = 48,
    noise_sigma: float = 3.0,
) -> list[VideoRecord]:
    return [
        planted_video(seed, i, n_context=n_context, n_predicted=n_predicted,
                      size=size, noise_sigma=noise_sigma)
        for i in range(n_videos)
    ]


def write_planted_dataset(
    out_dir: Path | str,
    n_videos: int,
    seed: int,
    n_context: int = 4,
    n_predicted: int = 16,
    size: int = 48,
    noise_sigma: float = 3.0,
    image_format: str = "png",
) -> Path:
    """Write frames plus a manifest; returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for i in range(n_videos):
        record = planted_video(seed, i, n_context=n_context,
                               n_predicted=n_predicted, size=size,
                               noise_sigma=noise_sigma)
        video_dir = out_dir / record.id
        video_dir.mkdir(exist_ok=True)
        paths = []
        for t in range(record.n_frames):
            rel = f"{record.id}/frame_{t:03d}.{image_format}"
            save_frame(record.frames[t], out_dir / rel)
            paths.append(rel)
        entries.append(VideoEntry(
            id=record.id,
            frame_paths=tuple(paths),
            n_context=record.n_context,
            n_predicted=record.n_predicted,
            dataset=record.dataset,
            predictor=record.predictor,
            distortion_tags=record.distortion_tags,
            is_stochastic_model=record.is_stochastic_model,
            mos=record.mos,
        ))
    manifest = DatasetManifest(entries=tuple(entries), root=out_dir)
    manifest_path = out_dir / "manifest.json"
    save_manifest(manifest, manifest_path)
    return manifest_path
