"""Learned quality predictor: feature assembly, PCA + linear regression,
model persistence.

Feature vectors per video, for backbone channel count K, N frames of which
N_p are predicted:

    mcs      K * N_p        motion-compensated cosine similarities
    rfd      K * (N - 1)    spatially averaged RFD features
    ssa      K * N          spatially averaged frame features (baseline)
    mcs+rfd  K * (N+N_p-1)  MCS block then RFD block
    ssa+rfd  K * (2N - 1)   SSA block then RFD block
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import (
    DataValidationError,
    FeatureMap,
    FormatError,
    VideoRecord,
    read_feature_file,
)
from .mcs import McsFeatureVector, mcs_video_features
from .providers import BackboneSpec, ssa
from .rfd import RfdFeatureVector, rfd_images
from .stats import LinearModel, PcaModel, linreg_fit, pca_fit, pca_transform

FEATURE_SETS = ("mcs", "rfd", "ssa", "mcs+rfd", "ssa+rfd")


@dataclass(frozen=True)
class VideoFeatures:
    """Per-video feature maps: one per frame and one per adjacent-frame RFD."""

    frame_maps: tuple[FeatureMap, ...]
    rfd_maps: tuple[FeatureMap, ...]

    def __post_init__(self):
        if len(self.rfd_maps) != len(self.frame_maps) - 1:
            raise DataValidationError(
                f"{len(self.frame_maps)} frame maps need "
                f"{len(self.frame_maps) - 1} RFD maps, got {len(self.rfd_maps)}"
            )


class ProviderSource:
    """Computes frame and RFD feature maps on the fly from an image provider."""

    def __init__(self, provider):
        self.provider = provider
        self.k = provider.k

    def video_features(self, video: VideoRecord) -> VideoFeatures:
        images = list(video.frames) + rfd_images(video.frames)
        if hasattr(self.provider, "features_for_images"):
            maps = self.provider.features_for_images(images)
        else:
            maps = [self.provider.features_for_image(img) for img in images]
        return VideoFeatures(
            frame_maps=tuple(maps[: video.n_frames]),
            rfd_maps=tuple(maps[video.n_frames:]),
        )


class PvqfCacheSource:
    """Reads per-video feature maps cached as <id>.frames.pvqf / <id>.rfd.pvqf."""

    def __init__(self, features_dir: Path | str):
        self.features_dir = Path(features_dir)

    def frames_path(self, video_id: str) -> Path:
        return self.features_dir / f"{video_id}.frames.pvqf"

    def rfd_path(self, video_id: str) -> Path:
        return self.features_dir / f"{video_id}.rfd.pvqf"

    def video_features(self, video: VideoRecord) -> VideoFeatures:
        frame_maps = read_feature_file(self.frames_path(video.id))
        rfd_maps = read_feature_file(self.rfd_path(video.id))
        if len(frame_maps) != video.n_frames:
            raise DataValidationError(
                f"{video.id}: cached {len(frame_maps)} frame maps, "
                f"video has {video.n_frames} frames"
            )
        return VideoFeatures(frame_maps=tuple(frame_maps), rfd_maps=tuple(rfd_maps))


def _as_source(provider_or_source):
    if hasattr(provider_or_source, "video_features"):
        return provider_or_source
    return ProviderSource(provider_or_source)


@dataclass(frozen=True)
class FeatureAssembly:
    """MCS and RFD vectors for one video plus their fixed-order concatenation."""

    mcs: McsFeatureVector
    rfd: RfdFeatureVector
    combined: np.ndarray  # [mcs || rfd], float32

    def __post_init__(self):
        expected = self.mcs.values.size + self.rfd.values.size
        if self.combined.shape != (expected,):
            raise DataValidationError("combined length must be |mcs| + |rfd|")


def assemble_mcs_rfd(video: VideoRecord, provider_or_source) -> FeatureAssembly:
    source = _as_source(provider_or_source)
    vf = source.video_features(video)
    mcs = mcs_video_features(vf.frame_maps, video.n_context)
    rfd_parts = [ssa(m) for m in vf.rfd_maps]
    rfd = RfdFeatureVector(
        values=np.concatenate(rfd_parts).astype(np.float32),
        k=vf.rfd_maps[0].k,
        n_diffs=len(vf.rfd_maps),
    )
    combined = np.concatenate([mcs.values, rfd.values])
    return FeatureAssembly(mcs=mcs, rfd=rfd, combined=combined)


def _assemble_from_maps(vf: VideoFeatures, n_context: int, feature_set: str) -> np.ndarray:
    blocks = []
    for part in feature_set.split("+"):
        if part == "mcs":
            blocks.append(mcs_video_features(vf.frame_maps, n_context).values)
        elif part == "ssa":
            blocks.append(
                np.concatenate([ssa(m) for m in vf.frame_maps]).astype(np.float32)
            )
        elif part == "rfd":
            blocks.append(
                np.concatenate([ssa(m) for m in vf.rfd_maps]).astype(np.float32)
            )
    return np.concatenate(blocks)


def assemble_features(
    video: VideoRecord, provider_or_source, feature_set: str = "mcs+rfd"
) -> np.ndarray:
    """Feature vector (float32) for one video under the chosen feature set."""
    if feature_set not in FEATURE_SETS:
        raise DataValidationError(f"unknown feature set {feature_set!r}")
    source = _as_source(provider_or_source)
    vf = source.video_features(video)
    return _assemble_from_maps(vf, video.n_context, feature_set)


@dataclass(frozen=True)
class FeatureConfig:
    n_context: int
    n_predicted: int
    feature_set: str


@dataclass(frozen=True)
class QualityModel:
    pca: PcaModel
    reg: LinearModel
    backbone: BackboneSpec
    feature_config: FeatureConfig

    def __post_init__(self):
        if self.pca.basis.shape[1] != self.reg.weights.shape[0]:
            raise DataValidationError(
                "PCA output dimension does not match regression input"
            )


def fit_from_features(
    x: np.ndarray,
    y: np.ndarray,
    k_prime: int,
    backbone: BackboneSpec,
    feature_config: FeatureConfig,
) -> QualityModel:
    """Fit PCA (on these rows only) then linear regression against MOS."""
    pca = pca_fit(x, k_prime)
    z = pca_transform(pca, x)
    reg = linreg_fit(z, np.asarray(y, dtype=np.float64))
    return QualityModel(pca=pca, reg=reg, backbone=backbone,
                        feature_config=feature_config)


def train(
    records: Sequence[VideoRecord],
    ids: Sequence[str],
    provider_or_source,
    k_prime: int = 240,
    feature_set: str = "mcs+rfd",
    backbone: BackboneSpec | None = None,
) -> QualityModel:
    """Train on the subset of ``records`` named by ``ids`` (all must have MOS)."""
    by_id = {r.id: r for r in records}
    ids = list(ids)
    if len(ids) < 2:
        raise DataValidationError("need at least 2 training videos")
    missing = [i for i in ids if i not in by_id]
    if missing:
        raise DataValidationError(f"unknown training ids {missing[:5]}")
    no_mos = [i for i in ids if by_id[i].mos is None]
    if no_mos:
        raise DataValidationError(f"training videos without MOS: {no_mos[:5]}")

    if feature_set not in FEATURE_SETS:
        raise DataValidationError(f"unknown feature set {feature_set!r}")
    source = _as_source(provider_or_source)
    first = by_id[ids[0]]
    rows = []
    k_channels = 1
    for i in ids:
        vf = source.video_features(by_id[i])
        k_channels = vf.frame_maps[0].k
        rows.append(_assemble_from_maps(vf, by_id[i].n_context, feature_set))
    x = np.stack(rows).astype(np.float64)
    y = np.array([by_id[i].mos for i in ids], dtype=np.float64)
    if backbone is None:
        provider = getattr(source, "provider", None)
        backbone = getattr(provider, "spec", None)
    if backbone is None:
        backbone = BackboneSpec("unknown", "unknown", k=k_channels, input_side=None)
    config = FeatureConfig(
        n_context=first.n_context,
        n_predicted=first.n_predicted,
        feature_set=feature_set,
    )
    return fit_from_features(x, y, k_prime, backbone, config)


def predict(model: QualityModel, video: VideoRecord, provider_or_source) -> float:
    """Predicted quality score (unclamped real) for one video."""
    cfg = model.feature_config
    if video.n_context != cfg.n_context or video.n_predicted != cfg.n_predicted:
        raise DataValidationError(
            f"{video.id}: frame counts ({video.n_context}, {video.n_predicted}) "
            f"do not match model config ({cfg.n_context}, {cfg.n_predicted})"
        )
    features = assemble_features(video, provider_or_source, cfg.feature_set)
    if features.shape[0] != model.pca.mean.shape[0]:
        raise DataValidationError(
            f"{video.id}: feature length {features.shape[0]} does not match "
            f"model ({model.pca.mean.shape[0]}); wrong backbone or config"
        )
    z = pca_transform(model.pca, features.astype(np.float64))
    return float(model.reg.predict(z))


MODEL_MAGIC = b"PVQM"
MODEL_VERSION = 1


def save_model(model: QualityModel, path: Path | str) -> None:
    """Serialize to a versioned binary file with a content checksum."""
    arrays = {
        "pca_mean": model.pca.mean.astype("<f8"),
        "pca_basis": model.pca.basis.astype("<f8"),
        "pca_variance": model.pca.explained_variance.astype("<f8"),
        "reg_weights": model.reg.weights.astype("<f8"),
        "reg_intercept": np.array([model.reg.intercept], dtype="<f8"),
    }
    header = {
        "arrays": [
            {"name": name, "shape": list(arr.shape)} for name, arr in arrays.items()
        ],
        "backbone": {
            "name": model.backbone.name,
            "tap_point": model.backbone.tap_point,
            "k": model.backbone.k,
            "input_side": model.backbone.input_side,
        },
        "feature_config": {
            "n_context": model.feature_config.n_context,
            "n_predicted": model.feature_config.n_predicted,
            "feature_set": model.feature_config.feature_set,
        },
        "k_prime": model.pca.k_prime,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode()
    payload = header_bytes + b"".join(arr.tobytes(order="C") for arr in arrays.values())
    digest = hashlib.sha256(payload).digest()
    with open(path, "wb") as f:
        f.write(MODEL_MAGIC)
        f.write(struct.pack("<IQ", MODEL_VERSION, len(header_bytes)))
        f.write(payload)
        f.write(digest)


def load_model(path: Path | str) -> QualityModel:
    blob = Path(path).read_bytes()
    if len(blob) < 16 or blob[:4] != MODEL_MAGIC:
        raise FormatError(f"{path}: not a model file")
    version, header_len = struct.unpack_from("<IQ", blob, 4)
    if version != MODEL_VERSION:
        raise FormatError(f"{path}: unsupported model version {version}")
    payload = blob[16:-32]
    digest = blob[-32:]
    if hashlib.sha256(payload).digest() != digest:
        raise FormatError(f"{path}: checksum mismatch (corrupt model file)")
    header = json.loads(payload[:header_len].decode())

    offset = header_len
    values = {}
    for spec in header["arrays"]:
        count = int(np.prod(spec["shape"])) if spec["shape"] else 1
        arr = np.frombuffer(payload, dtype="<f8", count=count, offset=offset)
        values[spec["name"]] = arr.reshape(spec["shape"]).astype(np.float64)
        offset += count * 8

    pca = PcaModel(
        mean=values["pca_mean"],
        basis=values["pca_basis"],
        explained_variance=values["pca_variance"],
        k_prime=int(header["k_prime"]),
    )
    reg = LinearModel(
        weights=values["reg_weights"],
        intercept=float(values["reg_intercept"][0]),
    )
    bb = header["backbone"]
    backbone = BackboneSpec(bb["name"], bb["tap_point"], bb["k"], bb["input_side"])
    fc = header["feature_config"]
    config = FeatureConfig(fc["n_context"], fc["n_predicted"], fc["feature_set"])
    return QualityModel(pca=pca, reg=reg, backbone=backbone, feature_config=config)
