"""Feature providers: one FeatureMap per input image.

Three kinds are supported:

* ``SyntheticProvider`` — a deterministic random-convolution backbone used
  for tests and demos.  Its weights are a pure function of the seed via a
  splitmix64 stream, so an implementation in any language reproduces the
  same features (the feature exporter has a matching twin).
* ``FileFeatureProvider`` — indexes precomputed maps in a PVQF file.
* ``OnnxProvider`` — runs an interchange-format model (optional; requires
  onnxruntime and a model file).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import (
    DataValidationError,
    FeatureMap,
    ProviderUnavailableError,
    read_feature_file,
    validate_frame,
)

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class BackboneSpec:
    """Identity of a feature extractor: network, tap layer, channel count."""

    name: str
    tap_point: str
    k: int
    input_side: int | None = None

    def __post_init__(self):
        if self.name in ("vgg19", "resnet50", "inceptionv3") and self.k not in (512, 2048):
            raise DataValidationError(
                f"{self.name} must declare k in {{512, 2048}}, got {self.k}"
            )
        if self.k < 1:
            raise DataValidationError("channel count must be >= 1")


# Learned-feature taps: the last convolutional layer before the FC layers.
VGG19 = BackboneSpec("vgg19", "block5_conv4", k=512, input_side=224)
RESNET50 = BackboneSpec("resnet50", "pre_global_pool", k=2048, input_side=224)
INCEPTIONV3 = BackboneSpec("inceptionv3", "pre_global_pool", k=2048, input_side=299)
# Separate tap used by the full-reference feature-space baselines.
VGG19_FR = BackboneSpec("vgg19", "block5_conv4", k=512, input_side=224)

BACKBONES = {"vgg19": VGG19, "resnet50": RESNET50, "inceptionv3": INCEPTIONV3}


def synthetic_spec(k: int) -> BackboneSpec:
    return BackboneSpec("synthetic", "random_conv_stage3", k=k, input_side=None)


def ssa(fmap: FeatureMap) -> np.ndarray:
    """Simple spatial averaging: reduce an h x w x K map to a K-vector."""
    return fmap.values.mean(axis=(0, 1), dtype=np.float64)


def _splitmix64(state: int) -> tuple[int, int]:
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    z = z ^ (z >> 31)
    return state, z


def _uniform_weights(state: int, count: int, scale: float) -> tuple[int, np.ndarray]:
    """Next ``count`` draws from splitmix64, mapped to [-scale, scale)."""
    out = np.empty(count, dtype=np.float64)
    for i in range(count):
        state, z = _splitmix64(state)
        u = (z >> 11) * 2.0 ** -53  # upper 53 bits -> [0, 1)
        out[i] = (2.0 * u - 1.0) * scale
    return state, out


def _conv3x3_same(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """3x3 zero-padded convolution; x is (B, C_in, H, W), w is (C_out, C_in, 3, 3).

    im2col + one GEMM per call; column order (c_in, ky, kx) matches the
    weight layout.
    """
    b, c_in, h, wd = x.shape
    c_out = w.shape[0]
    padded = np.zeros((b, c_in, h + 2, wd + 2), dtype=np.float64)
    padded[:, :, 1:-1, 1:-1] = x
    cols = np.empty((b, c_in, 3, 3, h, wd), dtype=np.float64)
    for ky in range(3):
        for kx in range(3):
            cols[:, :, ky, kx] = padded[:, :, ky:ky + h, kx:kx + wd]
    out = np.matmul(w.reshape(1, c_out, c_in * 9), cols.reshape(b, c_in * 9, h * wd))
    return out.reshape(b, c_out, h, wd)


class SyntheticProvider:
    """Deterministic 3-stage random-convolution feature extractor.

    Stages are bias-free 3x3 convolutions (3 -> 8 -> 16 -> k channels) with
    ReLU, followed by one non-overlapping ``downscale`` x ``downscale`` mean
    pool, so output h = H // downscale and w = W // downscale.  Weights come
    from a splitmix64 stream in stage order, (out, in, ky, kx) row-major,
    uniform in [-sqrt(3/fan_in), sqrt(3/fan_in)).  Bias-free means an all-zero
    input maps to all-zero features, and the map is Lipschitz in the input.
    """

    STAGE_WIDTHS = (8, 16)

    def __init__(self, seed: int, k: int, downscale: int = 1):
        if k < 1 or downscale < 1:
            raise DataValidationError("need k >= 1 and downscale >= 1")
        self.seed = int(seed)
        self.k = int(k)
        self.downscale = int(downscale)
        self.spec = synthetic_spec(k)
        widths = (3,) + self.STAGE_WIDTHS + (k,)
        state = self.seed & _MASK64
        self._weights = []
        for c_in, c_out in zip(widths[:-1], widths[1:]):
            fan_in = c_in * 9
            state, flat = _uniform_weights(state, c_out * fan_in, np.sqrt(3.0 / fan_in))
            self._weights.append(flat.reshape(c_out, c_in, 3, 3))

    def features_for_image(self, image: np.ndarray) -> FeatureMap:
        return self.features_for_images([image])[0]

    def features_for_images(self, images) -> list[FeatureMap]:
        """Batched extraction for same-size images (one convolution pass)."""
        images = [validate_frame(img) for img in images]
        h, w = images[0].shape[:2]
        for img in images:
            if img.shape[:2] != (h, w):
                raise DataValidationError("batched images must share one size")
        if h < self.downscale or w < self.downscale:
            raise DataValidationError(
                f"image {h}x{w} smaller than downscale {self.downscale}"
            )
        x = np.stack(images).astype(np.float64).transpose(0, 3, 1, 2) / 255.0
        for wts in self._weights:
            x = np.maximum(_conv3x3_same(x, wts), 0.0)
        d = self.downscale
        oh, ow = h // d, w // d
        x = x[:, :, : oh * d, : ow * d] \
            .reshape(len(images), self.k, oh, d, ow, d).mean(axis=(3, 5))
        return [FeatureMap(m.transpose(1, 2, 0).astype(np.float32)) for m in x]


def synthetic_provider(seed: int, k: int, downscale: int = 1) -> SyntheticProvider:
    return SyntheticProvider(seed, k, downscale)


class FileFeatureProvider:
    """Serves precomputed maps from a PVQF file, indexed by frame position."""

    def __init__(self, path: Path | str, spec: BackboneSpec | None = None):
        self.path = Path(path)
        self.maps = read_feature_file(self.path)
        self.k = self.maps[0].k if self.maps else 0
        self.spec = spec
        if spec is not None and self.k != spec.k:
            raise DataValidationError(
                f"{self.path}: file declares k={self.k} but spec "
                f"{spec.name} expects k={spec.k}"
            )

    def __len__(self) -> int:
        return len(self.maps)

    def __getitem__(self, index: int) -> FeatureMap:
        return self.maps[index]


# ImageNet normalization used when feeding real backbones.
_IMAGENET_MEAN = np.array([0.485, 0.456, 0.406])
_IMAGENET_STD = np.array([0.229, 0.224, 0.225])


class OnnxProvider:
    """Runs an interchange-format (ONNX) backbone on frames.

    Optional: constructing one without onnxruntime installed, or without the
    model file, raises ProviderUnavailableError.  Input frames are resized to
    the spec's canonical side with bilinear interpolation and normalized with
    the standard ImageNet constants; both choices are recorded in the PVQF
    sidecar by the extraction command.
    """

    PREPROCESSING = "bilinear resize to input_side, scale 1/255, imagenet mean/std"

    def __init__(self, model_path: Path | str, spec: BackboneSpec):
        try:
            import onnxruntime  # noqa: F401
        except ImportError as exc:
            raise ProviderUnavailableError(
                "onnxruntime is not installed; install the 'onnx' extra"
            ) from exc
        model_path = Path(model_path)
        if not model_path.exists():
            raise ProviderUnavailableError(f"model file missing: {model_path}")
        self.spec = spec
        self.k = spec.k
        self._session = onnxruntime.InferenceSession(
            str(model_path), providers=["CPUExecutionProvider"]
        )
        self._input_name = self._session.get_inputs()[0].name

    def features_for_image(self, image: np.ndarray) -> FeatureMap:
        from PIL import Image

        image = validate_frame(image)
        side = self.spec.input_side
        if side is not None and image.shape[:2] != (side, side):
            image = np.asarray(
                Image.fromarray(image).resize((side, side), Image.BILINEAR)
            )
        x = image.astype(np.float32) / 255.0
        x = (x - _IMAGENET_MEAN) / _IMAGENET_STD
        x = x.transpose(2, 0, 1)[None].astype(np.float32)
        (out,) = self._session.run(None, {self._input_name: x})
        if out.ndim != 4 or out.shape[0] != 1:
            raise DataValidationError(f"unexpected model output shape {out.shape}")
        fmap = out[0].transpose(1, 2, 0)  # NCHW -> h, w, k
        if fmap.shape[2] != self.spec.k:
            raise DataValidationError(
                f"model produced k={fmap.shape[2]}, spec expects {self.spec.k}"
            )
        return FeatureMap(fmap)
