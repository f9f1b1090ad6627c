"""Domain types, the dataset manifest, and the PVQF feature-file format.

A video here is a stack of 8-bit RGB frames: the first ``n_context`` frames
are real context shown to a predictor, the remaining ``n_predicted`` frames
are the predictor's output.  Feature tensors produced from frames are stored
on disk in the PVQF binary format defined below so that extraction and
scoring can run as separate processes (or separate programs entirely).

PVQF layout, byte-exact:

    bytes  0-3   magic ``b"PVQF"``
    bytes  4-7   version (uint32 LE, currently 1)
    bytes  8-11  n_maps (uint32 LE)
    bytes 12-15  h      (uint32 LE)
    bytes 16-19  w      (uint32 LE)
    bytes 20-23  k      (uint32 LE)
    then n_maps*h*w*k float32 LE values in [map][row][col][channel] order.

No padding, no trailer.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image

PVQF_MAGIC = b"PVQF"
PVQF_VERSION = 1
MANIFEST_SCHEMA_VERSION = 1

# "synthetic" is not part of the source database but tags generated demo data.
DATASETS = frozenset(
    {"BAIR", "BDD100K", "Caltech", "KITTI", "KTH", "MSR", "PENN", "PUSH",
     "UCF101", "synthetic"}
)
DISTORTION_TAGS = frozenset({"blur", "shape", "disappearance", "color", "natural"})


class PvqaError(Exception):
    """Base class for errors raised by this package."""


class DataValidationError(PvqaError):
    """Input data violates a documented invariant."""


class FormatError(PvqaError):
    """A binary or text artifact does not parse as its declared format."""


class NumericalError(PvqaError):
    """A numerical routine received degenerate input or failed to converge."""


class ProviderUnavailableError(PvqaError):
    """A feature provider's backing resource (file, model) is missing."""


def validate_frame(frame: np.ndarray) -> np.ndarray:
    """Check that ``frame`` is an H x W x 3 uint8 array and return it."""
    frame = np.asarray(frame)
    if frame.ndim != 3 or frame.shape[2] != 3:
        raise DataValidationError(f"frame must be HxWx3, got shape {frame.shape}")
    if frame.shape[0] < 1 or frame.shape[1] < 1:
        raise DataValidationError(f"frame has empty spatial dims {frame.shape}")
    if frame.dtype != np.uint8:
        raise DataValidationError(f"frame samples must be uint8, got {frame.dtype}")
    return frame


@dataclass(frozen=True)
class FeatureMap:
    """One frame's backbone activations, an h x w x K float32 tensor."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float32)
        if v.ndim != 3:
            raise DataValidationError(f"feature map must be h x w x k, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise DataValidationError("feature map contains non-finite values")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def h(self) -> int:
        return self.values.shape[0]

    @property
    def w(self) -> int:
        return self.values.shape[1]

    @property
    def k(self) -> int:
        return self.values.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.values.shape


@dataclass(frozen=True)
class VideoRecord:
    """Frames plus metadata for one (context + predicted) video."""

    id: str
    frames: np.ndarray  # (N, H, W, 3) uint8
    n_context: int
    n_predicted: int
    dataset: str
    predictor: str = ""
    distortion_tags: frozenset[str] = frozenset()
    is_stochastic_model: bool = False
    mos: float | None = None

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.uint8)
        if frames.ndim != 4 or frames.shape[3] != 3:
            raise DataValidationError(
                f"frames must be (N, H, W, 3) uint8, got shape {frames.shape}"
            )
        if self.n_context < 1 or self.n_predicted < 1:
            raise DataValidationError("need n_context >= 1 and n_predicted >= 1")
        if frames.shape[0] != self.n_context + self.n_predicted:
            raise DataValidationError(
                f"{self.id}: {frames.shape[0]} frames but "
                f"n_context+n_predicted = {self.n_context + self.n_predicted}"
            )
        if self.dataset not in DATASETS:
            raise DataValidationError(f"unknown dataset {self.dataset!r}")
        tags = frozenset(self.distortion_tags)
        bad = tags - DISTORTION_TAGS
        if bad:
            raise DataValidationError(f"unknown distortion tags {sorted(bad)}")
        if self.mos is not None and not 0.0 <= float(self.mos) <= 100.0:
            raise DataValidationError(f"mos {self.mos} outside [0, 100]")
        frames.flags.writeable = False
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "distortion_tags", tags)

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    def frame(self, index: int) -> np.ndarray:
        return self.frames[index]


@dataclass(frozen=True)
class VideoEntry:
    """A manifest row: VideoRecord metadata plus frame file paths."""

    id: str
    frame_paths: tuple[str, ...]
    n_context: int
    n_predicted: int
    dataset: str
    predictor: str = ""
    distortion_tags: frozenset[str] = frozenset()
    is_stochastic_model: bool = False
    mos: float | None = None

    def load(self, root: Path) -> VideoRecord:
        """Read the frame files (relative to ``root``) into a VideoRecord."""
        frames = [load_frame(root / p) for p in self.frame_paths]
        shapes = {f.shape for f in frames}
        if len(shapes) != 1:
            raise DataValidationError(f"{self.id}: frames have mixed shapes {shapes}")
        return VideoRecord(
            id=self.id,
            frames=np.stack(frames),
            n_context=self.n_context,
            n_predicted=self.n_predicted,
            dataset=self.dataset,
            predictor=self.predictor,
            distortion_tags=self.distortion_tags,
            is_stochastic_model=self.is_stochastic_model,
            mos=self.mos,
        )


@dataclass(frozen=True)
class DatasetManifest:
    """Validated list of video entries; ``root`` anchors relative paths."""

    entries: tuple[VideoEntry, ...]
    root: Path
    schema_version: int = MANIFEST_SCHEMA_VERSION

    def __post_init__(self):
        ids = [e.id for e in self.entries]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise DataValidationError(f"duplicate video ids {dupes}")

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def ids(self) -> list[str]:
        return [e.id for e in self.entries]

    def entry(self, video_id: str) -> VideoEntry:
        for e in self.entries:
            if e.id == video_id:
                return e
        raise KeyError(video_id)

    def load_video(self, video_id: str) -> VideoRecord:
        return self.entry(video_id).load(self.root)


def load_frame(path: Path | str) -> np.ndarray:
    """Load one image file as an H x W x 3 uint8 frame."""
    path = Path(path)
    if not path.exists():
        raise DataValidationError(f"frame file missing: {path}")
    with Image.open(path) as img:
        arr = np.asarray(img.convert("RGB"), dtype=np.uint8)
    return validate_frame(arr)


def save_frame(frame: np.ndarray, path: Path | str) -> None:
    """Write a frame as an image file; format chosen from the suffix."""
    validate_frame(frame)
    Image.fromarray(frame, mode="RGB").save(path)


def load_manifest(path: Path | str) -> DatasetManifest:
    """Load and validate a JSON dataset manifest.

    Every entry must satisfy the VideoRecord header invariants and every
    referenced frame file must exist (relative to the manifest's directory).
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot parse manifest {path}: {exc}") from exc

    if not isinstance(raw, dict) or "schema_version" not in raw:
        raise FormatError(f"manifest {path} missing schema_version")
    if raw["schema_version"] != MANIFEST_SCHEMA_VERSION:
        raise FormatError(
            f"unsupported manifest schema_version {raw['schema_version']}"
        )

    root = path.parent
    entries = []
    for i, item in enumerate(raw.get("entries", [])):
        try:
            entry = VideoEntry(
                id=str(item["id"]),
                frame_paths=tuple(item["frames"]),
                n_context=int(item["n_context"]),
                n_predicted=int(item["n_predicted"]),
                dataset=str(item["dataset"]),
                predictor=str(item.get("predictor", "")),
                distortion_tags=frozenset(item.get("distortion_tags", [])),
                is_stochastic_model=bool(item.get("is_stochastic_model", False)),
                mos=None if item.get("mos") is None else float(item["mos"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"manifest entry {i} malformed: {exc}") from exc
        _validate_entry(entry, root)
        entries.append(entry)

    return DatasetManifest(entries=tuple(entries), root=root,
                           schema_version=raw["schema_version"])


def _validate_entry(entry: VideoEntry, root: Path) -> None:
    if entry.n_context < 1 or entry.n_predicted < 1:
        raise DataValidationError(f"{entry.id}: need n_context, n_predicted >= 1")
    n = entry.n_context + entry.n_predicted
    if len(entry.frame_paths) != n:
        raise DataValidationError(
            f"{entry.id}: {len(entry.frame_paths)} frame files but "
            f"n_context+n_predicted = {n}"
        )
    if entry.dataset not in DATASETS:
        raise DataValidationError(f"{entry.id}: unknown dataset {entry.dataset!r}")
    bad = frozenset(entry.distortion_tags) - DISTORTION_TAGS
    if bad:
        raise DataValidationError(f"{entry.id}: unknown distortion tags {sorted(bad)}")
    if entry.mos is not None and not 0.0 <= entry.mos <= 100.0:
        raise DataValidationError(f"{entry.id}: mos {entry.mos} outside [0, 100]")
    for p in entry.frame_paths:
        if not (root / p).exists():
            raise DataValidationError(f"{entry.id}: missing frame file {p}")


def save_manifest(manifest: DatasetManifest, path: Path | str) -> None:
    """Write a manifest back out as JSON (paths stay relative)."""
    payload = {
        "schema_version": manifest.schema_version,
        "entries": [
            {
                "id": e.id,
                "frames": list(e.frame_paths),
                "n_context": e.n_context,
                "n_predicted": e.n_predicted,
                "dataset": e.dataset,
                "predictor": e.predictor,
                "distortion_tags": sorted(e.distortion_tags),
                "is_stochastic_model": e.is_stochastic_model,
                "mos": e.mos,
            }
            for e in manifest.entries
        ],
    }
    Path(path).write_text(json.dumps(payload, indent=1) + "\n")


_HEADER = struct.Struct("<4sIIIII")  # magic, version, n_maps, h, w, k


def write_feature_file(maps: Sequence[FeatureMap], path: Path | str) -> None:
    """Write feature maps to a PVQF file; all maps must share one shape."""
    maps = list(maps)
    if not maps:
        raise DataValidationError("cannot write an empty PVQF file")
    shape = maps[0].shape
    for m in maps:
        if m.shape != shape:
            raise DataValidationError(
                f"heterogeneous map shapes: {m.shape} vs {shape}"
            )
    h, w, k = shape
    header = _HEADER.pack(PVQF_MAGIC, PVQF_VERSION, len(maps), h, w, k)
    stacked = np.stack([m.values for m in maps]).astype("<f4", copy=False)
    with open(path, "wb") as f:
        f.write(header)
        f.write(stacked.tobytes(order="C"))


def read_feature_file(path: Path | str) -> list[FeatureMap]:
    """Read a PVQF file back into feature maps, exactly as written."""
    path = Path(path)
    if not path.exists():
        raise ProviderUnavailableError(f"feature file missing: {path}")
    blob = path.read_bytes()
    if len(blob) < _HEADER.size:
        raise FormatError(f"{path}: truncated header ({len(blob)} bytes)")
    magic, version, n_maps, h, w, k = _HEADER.unpack_from(blob)
    if magic != PVQF_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != PVQF_VERSION:
        raise FormatError(f"{path}: unsupported PVQF version {version}")
    expected = _HEADER.size + 4 * n_maps * h * w * k
    if len(blob) != expected:
        raise FormatError(
            f"{path}: payload is {len(blob)} bytes, header implies {expected}"
        )
    data = np.frombuffer(blob, dtype="<f4", offset=_HEADER.size)
    data = data.reshape(n_maps, h, w, k)
    return [FeatureMap(data[i]) for i in range(n_maps)]


def sidecar_path(pvqf_path: Path | str) -> Path:
    """Path of the text metadata sidecar next to a PVQF file."""
    p = Path(pvqf_path)
    return p.with_name(p.name + ".meta")


def write_sidecar(pvqf_path: Path | str, metadata: dict) -> None:
    sidecar_path(pvqf_path).write_text(json.dumps(metadata, indent=1) + "\n")


def read_sidecar(pvqf_path: Path | str) -> dict:
    p = sidecar_path(pvqf_path)
    if not p.exists():
        return {}
    return json.loads(p.read_text())
