"""Regenerate the shared cross-implementation test vectors in testdata/.

Writes a 4-frame 16x16 micro-video (PPM frames + manifest), its RFD images,
and the PVQF feature files produced by the synthetic backbone
(seed 7, k 8, downscale 4).  Both the Python package and the TypeScript
exporter test against these files.
"""

import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from pvqa import SyntheticProvider, save_manifest, write_feature_file
from pvqa.core import DatasetManifest, VideoEntry, save_frame
from pvqa.model import ProviderSource
from pvqa.synthetic import planted_video

SEED = 7
K = 8
DOWNSCALE = 4


def main():
    out = ROOT / "testdata" / "micro"
    out.mkdir(parents=True, exist_ok=True)
    video = planted_video(seed=2024, index=0, n_context=1, n_predicted=3, size=16)

    frame_paths = []
    for t in range(video.n_frames):
        rel = f"frame_{t:03d}.ppm"
        save_frame(video.frames[t], out / rel)
        frame_paths.append(rel)
    entry = VideoEntry(
        id="micro", frame_paths=tuple(frame_paths),
        n_context=video.n_context, n_predicted=video.n_predicted,
        dataset="synthetic", predictor="planted_blur",
        distortion_tags=video.distortion_tags, mos=video.mos,
    )
    save_manifest(DatasetManifest(entries=(entry,), root=out), out / "manifest.json")

    provider = SyntheticProvider(seed=SEED, k=K, downscale=DOWNSCALE)
    vf = ProviderSource(provider).video_features(video)
    write_feature_file(vf.frame_maps, out / "golden.frames.pvqf")
    write_feature_file(vf.rfd_maps, out / "golden.rfd.pvqf")

    from pvqa.rfd import rfd_images
    for t, img in enumerate(rfd_images(video.frames)):
        save_frame(img, out / f"golden.rfd_{t:03d}.ppm")

    print(f"golden vectors written under {out}")


if __name__ == "__main__":
    main()
