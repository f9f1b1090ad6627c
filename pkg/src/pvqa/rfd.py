"""Rescaled frame differences (RFD) and their spatially averaged features.

The signed difference of two adjacent frames is stretched per color channel
to fill [0, 255] and treated as an image, which makes moving object contours
visible to an image backbone.  Per-difference features are reduced by simple
spatial averaging and concatenated over the N-1 adjacent pairs.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import DataValidationError, save_frame, validate_frame
from .mcs import cosine_similarity
from .providers import ssa


def rescaled_frame_difference(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Rescale b - a per color channel to [0, 255]; constant channels go to 0.

    Rounding is half away from zero (equal to half up here, the scaled values
    being nonnegative).  The arithmetic is plain float64 so any implementation
    of this rule produces byte-identical images.
    """
    a = validate_frame(a)
    b = validate_frame(b)
    if a.shape != b.shape:
        raise DataValidationError(f"dimension mismatch: {a.shape} vs {b.shape}")
    d = b.astype(np.int32) - a.astype(np.int32)
    lo = d.min(axis=(0, 1))
    hi = d.max(axis=(0, 1))
    out = np.zeros(a.shape, dtype=np.uint8)
    for c in range(3):
        span = int(hi[c]) - int(lo[c])
        if span == 0:
            continue
        scaled = (d[:, :, c] - lo[c]) * 255.0 / span
        out[:, :, c] = np.floor(scaled + 0.5).astype(np.uint8)
    return out


def rfd_images(frames: np.ndarray | Sequence[np.ndarray]) -> list[np.ndarray]:
    """RFD image for each adjacent frame pair, in temporal order."""
    frames = np.asarray(frames)
    if frames.shape[0] < 2:
        raise DataValidationError("need at least 2 frames")
    return [rescaled_frame_difference(frames[t], frames[t + 1])
            for t in range(frames.shape[0] - 1)]


@dataclass(frozen=True)
class RfdFeatureVector:
    """Difference-major, channel-minor concatenation over the N-1 pairs."""

    values: np.ndarray  # float32, length k * n_diffs
    k: int
    n_diffs: int

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float32)
        if v.shape != (self.k * self.n_diffs,):
            raise DataValidationError(
                f"expected length {self.k * self.n_diffs}, got {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise DataValidationError("RFD features must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)


def rfd_video_features(
    frames: np.ndarray | Sequence[np.ndarray], provider
) -> RfdFeatureVector:
    """Spatially averaged provider features of every RFD image, concatenated."""
    images = rfd_images(frames)
    parts = [ssa(provider.features_for_image(img)) for img in images]
    values = np.concatenate(parts).astype(np.float32)
    return RfdFeatureVector(values=values, k=parts[0].shape[0], n_diffs=len(images))


def rfd_dissimilarity(x: np.ndarray, y: np.ndarray) -> float:
    """1 - cosine similarity between two feature vectors."""
    return 1.0 - cosine_similarity(x, y)


def dump_rfd_images(
    frames: np.ndarray | Sequence[np.ndarray], out_dir: Path | str, stem: str = "rfd"
) -> list[Path]:
    """Write each RFD image to ``out_dir`` for visual inspection."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for t, img in enumerate(rfd_images(frames)):
        p = out_dir / f"{stem}_{t:03d}.png"
        save_frame(img, p)
        paths.append(p)
    return paths
