"""Motion-compensated cosine similarity (MCS) features.

For every spatial cell of the last context frame's feature map we search the
predicted frame's map for the cell with the best cosine similarity between
channel vectors (an exhaustive search, since feature maps are small), then
score each channel plane of the context map against the motion-compensated
plane.  Concatenating the per-frame K-vectors over all predicted frames gives
the K*N_p video feature.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import DataValidationError, FeatureMap


def cosine_similarity(p: np.ndarray, q: np.ndarray) -> float:
    """Cosine similarity p.q / (|p||q|), defined as 0 if either norm is 0."""
    p = np.asarray(p, dtype=np.float64).ravel()
    q = np.asarray(q, dtype=np.float64).ravel()
    if p.shape != q.shape:
        raise DataValidationError(f"length mismatch: {p.shape} vs {q.shape}")
    if p.size < 1:
        raise DataValidationError("vectors must have length >= 1")
    np_, nq = np.linalg.norm(p), np.linalg.norm(q)
    if np_ == 0.0 or nq == 0.0:
        return 0.0
    return float(np.clip(np.dot(p, q) / (np_ * nq), -1.0, 1.0))


@dataclass(frozen=True)
class MotionField:
    """Best-match coordinates into the target map, one per source cell."""

    rows: np.ndarray  # (h, w) int, matched i'
    cols: np.ndarray  # (h, w) int, matched j'
    similarity: np.ndarray  # (h, w) float64, best cosine similarity

    def __post_init__(self):
        h, w = self.rows.shape
        if self.cols.shape != (h, w) or self.similarity.shape != (h, w):
            raise DataValidationError("motion field components disagree in shape")
        if (self.rows < 0).any() or (self.rows >= h).any() \
                or (self.cols < 0).any() or (self.cols >= w).any():
            raise DataValidationError("matched coordinates out of range")
        if not np.all(np.isfinite(self.similarity)):
            raise DataValidationError("non-finite similarity")


def _unit_rows(m: np.ndarray) -> np.ndarray:
    """Normalize rows to unit length; all-zero rows stay zero."""
    norms = np.linalg.norm(m, axis=1)
    safe = np.where(norms > 0.0, norms, 1.0)
    return m / safe[:, None]


def motion_compensate(
    context: FeatureMap, predicted: FeatureMap, window: int | None = None
) -> MotionField:
    """Exhaustive best-cosine-match search from context cells to predicted cells.

    Every context cell is matched against all predicted cells (or, when
    ``window`` is given, cells within a square window of that half-width).
    Ties break to the smallest row-major linear index.  Cells whose channel
    vector is zero score 0 against every candidate and so match the first
    candidate in row-major order.
    """
    if context.shape != predicted.shape:
        raise DataValidationError(
            f"shape mismatch: {context.shape} vs {predicted.shape}"
        )
    h, w, k = context.shape
    c = _unit_rows(context.values.reshape(h * w, k).astype(np.float64))
    p = _unit_rows(predicted.values.reshape(h * w, k).astype(np.float64))
    sims = c @ p.T  # (h*w, h*w)

    if window is not None:
        if window < 0:
            raise DataValidationError("window must be >= 0")
        ii, jj = np.divmod(np.arange(h * w), w)
        # candidates outside the window score below any cosine similarity
        far = (np.abs(ii[:, None] - ii[None, :]) > window) | \
              (np.abs(jj[:, None] - jj[None, :]) > window)
        sims = np.where(far, -2.0, sims)

    best = sims.argmax(axis=1)  # first max = smallest row-major index
    best_sim = np.clip(sims[np.arange(h * w), best], -1.0, 1.0)
    return MotionField(
        rows=(best // w).reshape(h, w),
        cols=(best % w).reshape(h, w),
        similarity=best_sim.reshape(h, w),
    )


def mcs_frame_features(
    context: FeatureMap, predicted: FeatureMap, window: int | None = None
) -> np.ndarray:
    """Per-channel cosine similarity of context vs motion-compensated planes.

    Returns a length-K float64 vector; channels whose context or compensated
    plane is all zero get 0.
    """
    field = motion_compensate(context, predicted, window=window)
    compensated = predicted.values[field.rows, field.cols, :]
    h, w, k = context.shape
    a = context.values.reshape(h * w, k).astype(np.float64)
    b = compensated.reshape(h * w, k).astype(np.float64)
    num = np.einsum("ik,ik->k", a, b)
    na = np.linalg.norm(a, axis=0)
    nb = np.linalg.norm(b, axis=0)
    ok = (na > 0.0) & (nb > 0.0)
    out = np.zeros(k, dtype=np.float64)
    out[ok] = num[ok] / (na[ok] * nb[ok])
    return np.clip(out, -1.0, 1.0)


@dataclass(frozen=True)
class McsFeatureVector:
    """Frame-major, channel-minor concatenation over predicted frames."""

    values: np.ndarray  # float32, length k * n_predicted
    k: int
    n_predicted: int

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float32)
        if v.shape != (self.k * self.n_predicted,):
            raise DataValidationError(
                f"expected length {self.k * self.n_predicted}, got {v.shape}"
            )
        if not np.all(np.isfinite(v)) or (np.abs(v) > 1.0 + 1e-6).any():
            raise DataValidationError("MCS features must be finite and in [-1, 1]")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)


def mcs_video_features(
    maps: Sequence[FeatureMap], n_context: int, window: int | None = None
) -> McsFeatureVector:
    """MCS vector for a whole video; only the last context frame is the reference."""
    maps = list(maps)
    n = len(maps)
    if n_context < 1 or n <= n_context:
        raise DataValidationError(
            f"need at least one predicted frame: N={n}, N_c={n_context}"
        )
    shape = maps[0].shape
    for m in maps:
        if m.shape != shape:
            raise DataValidationError("feature maps must share one shape")
    reference = maps[n_context - 1]
    parts = [mcs_frame_features(reference, maps[t], window=window)
             for t in range(n_context, n)]
    values = np.concatenate(parts).astype(np.float32)
    return McsFeatureVector(values=values, k=shape[2], n_predicted=n - n_context)
