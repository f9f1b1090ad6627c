"""Full-reference baseline measures: MSE, SSIM, MS-SSIM, gradient difference,
and feature-space MSE / cosine similarity.

Video-level scores average the per-frame values over the predicted frames
only; context frames are shared with the ground truth and would dilute every
metric identically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .core import DataValidationError, VideoRecord, validate_frame
from .mcs import cosine_similarity

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = (0.01 * 255.0) ** 2
SSIM_C2 = (0.03 * 255.0) ** 2
# standard 5-scale weights; renormalized when resolution limits the scales
MSSSIM_WEIGHTS = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)

HIGHER_IS_BETTER = "higher_is_better"
LOWER_IS_BETTER = "lower_is_better"


def _check_same_shape(pred: np.ndarray, ref: np.ndarray):
    pred = validate_frame(pred)
    ref = validate_frame(ref)
    if pred.shape != ref.shape:
        raise DataValidationError(f"shape mismatch: {pred.shape} vs {ref.shape}")
    return pred, ref


def frame_mse(pred: np.ndarray, ref: np.ndarray) -> float:
    """Mean squared error over all pixels and channels, values in [0, 255]."""
    pred, ref = _check_same_shape(pred, ref)
    diff = pred.astype(np.float64) - ref.astype(np.float64)
    return float(np.mean(diff * diff))


def luminance(frame: np.ndarray) -> np.ndarray:
    """BT.601 luminance of an RGB frame, float64 in [0, 255]."""
    f = frame.astype(np.float64)
    return 0.299 * f[:, :, 0] + 0.587 * f[:, :, 1] + 0.114 * f[:, :, 2]


def _gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    half = (size - 1) / 2.0
    g = np.exp(-((np.arange(size) - half) ** 2) / (2.0 * sigma ** 2))
    return g / g.sum()


def _windowed(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Separable windowed mean, valid region only."""
    pad = (kernel.size - 1) // 2
    out = ndimage.correlate1d(img, kernel, axis=0, mode="constant")
    out = ndimage.correlate1d(out, kernel, axis=1, mode="constant")
    return out[pad:-pad, pad:-pad]


def _ssim_terms(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-window luminance and contrast-structure terms on 2-D planes."""
    kernel = _gaussian_window()
    mu_x = _windowed(x, kernel)
    mu_y = _windowed(y, kernel)
    # biased (weighted-sum) second moments, compensation factor 1
    sxx = _windowed(x * x, kernel) - mu_x * mu_x
    syy = _windowed(y * y, kernel) - mu_y * mu_y
    sxy = _windowed(x * y, kernel) - mu_x * mu_y
    lum = (2.0 * mu_x * mu_y + SSIM_C1) / (mu_x ** 2 + mu_y ** 2 + SSIM_C1)
    cs = (2.0 * sxy + SSIM_C2) / (sxx + syy + SSIM_C2)
    return lum, cs


def frame_ssim(pred: np.ndarray, ref: np.ndarray, channels: str = "luma") -> float:
    """Mean local SSIM with an 11x11 Gaussian window (sigma 1.5).

    ``channels="luma"`` (default) computes on BT.601 luminance; ``"rgb"``
    averages the per-channel SSIM values.
    """
    pred, ref = _check_same_shape(pred, ref)
    if min(pred.shape[:2]) < SSIM_WINDOW:
        raise DataValidationError(
            f"image {pred.shape[:2]} smaller than the {SSIM_WINDOW}-pixel window"
        )
    if channels == "luma":
        planes = [(luminance(pred), luminance(ref))]
    elif channels == "rgb":
        planes = [(pred[:, :, c].astype(np.float64), ref[:, :, c].astype(np.float64))
                  for c in range(3)]
    else:
        raise DataValidationError(f"unknown channel mode {channels!r}")
    vals = []
    for x, y in planes:
        lum, cs = _ssim_terms(x, y)
        vals.append(float(np.mean(lum * cs)))
    return float(np.mean(vals))


def msssim_scales(height: int, width: int) -> int:
    """Number of usable dyadic scales given the 11-pixel window."""
    side = min(height, width)
    scales = 0
    while scales < len(MSSSIM_WEIGHTS) and side >= SSIM_WINDOW:
        scales += 1
        side //= 2
    return scales


def frame_msssim(pred: np.ndarray, ref: np.ndarray) -> float:
    """Multi-scale SSIM on luminance with the standard 5-scale weights.

    When the resolution supports fewer than 5 scales, the first L weights are
    renormalized to sum to 1; fewer than 2 scales is an error.
    """
    pred, ref = _check_same_shape(pred, ref)
    n_scales = msssim_scales(*pred.shape[:2])
    if n_scales < 2:
        raise DataValidationError(
            f"image {pred.shape[:2]} too small for 2 dyadic scales"
        )
    weights = np.asarray(MSSSIM_WEIGHTS[:n_scales])
    weights = weights / weights.sum()

    x = luminance(pred)
    y = luminance(ref)
    result = 1.0
    for level in range(n_scales):
        lum, cs = _ssim_terms(x, y)
        if level < n_scales - 1:
            result *= max(float(np.mean(cs)), 0.0) ** weights[level]
            x = _halve(x)
            y = _halve(y)
        else:
            result *= max(float(np.mean(lum * cs)), 0.0) ** weights[level]
    return float(result)


def _halve(img: np.ndarray) -> np.ndarray:
    """2x2 mean pooling; odd trailing rows/columns are dropped."""
    h, w = img.shape
    img = img[: h - h % 2, : w - w % 2]
    return img.reshape(h // 2, 2, w // 2, 2).mean(axis=(1, 3))


def gradient_difference(pred: np.ndarray, ref: np.ndarray) -> float:
    """Forward-difference gradient magnitude mismatch, averaged per pixel.

    Lower is better; zero iff the two images have identical horizontal and
    vertical gradient magnitudes.
    """
    pred, ref = _check_same_shape(pred, ref)
    if pred.shape[0] < 2 or pred.shape[1] < 2:
        raise DataValidationError("need at least 2x2 images")
    p = pred.astype(np.float64)
    r = ref.astype(np.float64)
    gh = np.abs(np.abs(r[:, 1:] - r[:, :-1]) - np.abs(p[:, 1:] - p[:, :-1]))
    gv = np.abs(np.abs(r[1:, :] - r[:-1, :]) - np.abs(p[1:, :] - p[:-1, :]))
    return float((gh.sum() + gv.sum()) / (pred.shape[0] * pred.shape[1]))


def feature_mse(pred: np.ndarray, ref: np.ndarray, provider) -> float:
    """MSE between the flattened feature tensors of the two frames."""
    fp = provider.features_for_image(pred).values.astype(np.float64)
    fr = provider.features_for_image(ref).values.astype(np.float64)
    if fp.shape != fr.shape:
        raise DataValidationError("provider returned mismatched feature shapes")
    return float(np.mean((fp - fr) ** 2))


def feature_cosine(pred: np.ndarray, ref: np.ndarray, provider) -> float:
    """Cosine similarity between the flattened feature tensors."""
    fp = provider.features_for_image(pred).values
    fr = provider.features_for_image(ref).values
    if fp.shape != fr.shape:
        raise DataValidationError("provider returned mismatched feature shapes")
    return cosine_similarity(fp.ravel(), fr.ravel())


@dataclass(frozen=True)
class FrScore:
    metric: str
    per_frame: np.ndarray  # one value per predicted frame
    aggregate: float       # arithmetic mean of per_frame
    polarity: str


# name -> (frame function taking (pred, ref[, provider]), polarity, needs provider)
FR_METRICS = {
    "mse": (frame_mse, LOWER_IS_BETTER, False),
    "ssim": (frame_ssim, HIGHER_IS_BETTER, False),
    "msssim": (frame_msssim, HIGHER_IS_BETTER, False),
    "gradient_difference": (gradient_difference, LOWER_IS_BETTER, False),
    "feature_mse": (feature_mse, LOWER_IS_BETTER, True),
    "feature_cosine": (feature_cosine, HIGHER_IS_BETTER, True),
}


def fr_video_score(
    metric: str, pred_video: VideoRecord, ref_video: VideoRecord, provider=None
) -> FrScore:
    """Apply a full-reference metric to each predicted frame pair and average."""
    if metric not in FR_METRICS:
        raise DataValidationError(f"unknown FR metric {metric!r}")
    fn, polarity, needs_provider = FR_METRICS[metric]
    if needs_provider and provider is None:
        raise DataValidationError(f"metric {metric!r} needs a feature provider")
    if pred_video.n_frames != ref_video.n_frames \
            or pred_video.frames.shape != ref_video.frames.shape:
        raise DataValidationError("pred and ref videos disagree in frame layout")
    if pred_video.n_context != ref_video.n_context:
        raise DataValidationError("pred and ref videos disagree in n_context")

    values = []
    for t in range(pred_video.n_context, pred_video.n_frames):
        if needs_provider:
            values.append(fn(pred_video.frames[t], ref_video.frames[t], provider))
        else:
            values.append(fn(pred_video.frames[t], ref_video.frames[t]))
    per_frame = np.asarray(values, dtype=np.float64)
    return FrScore(metric=metric, per_frame=per_frame,
                   aggregate=float(per_frame.mean()), polarity=polarity)
