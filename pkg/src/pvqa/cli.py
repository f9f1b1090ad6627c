"""Command-line surface binding the modules into reproducible workflows.

Exit codes: 0 success, 1 usage error, 2 data validation error, 3 numerical
failure.  Most flags can also be set through PVQA_* environment variables
(e.g. PVQA_MANIFEST, PVQA_FEATURES_DIR, PVQA_SEED).
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import harness, model, subjective, synthetic
from .baselines import FR_METRICS, fr_video_score
from .core import (
    DataValidationError,
    FormatError,
    NumericalError,
    ProviderUnavailableError,
    load_manifest,
    read_sidecar,
    write_feature_file,
    write_sidecar,
)
from .providers import BACKBONES, OnnxProvider, SyntheticProvider

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

EXPORTER_VERSION = "pvqa-0.1.0"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _env(name: str, default=None):
    return os.environ.get(f"PVQA_{name}", default)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pvqa", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    feat = sub.add_parser("features", help="extract and cache PVQF feature files")
    feat.add_argument("--manifest", default=_env("MANIFEST"), required=_env("MANIFEST") is None)
    feat.add_argument("--features-dir", default=_env("FEATURES_DIR"),
                      required=_env("FEATURES_DIR") is None)
    feat.add_argument("--backbone", default=_env("BACKBONE", "synthetic"),
                      choices=["synthetic", "vgg19", "resnet50", "inceptionv3"])
    feat.add_argument("--model-file", default=_env("MODEL_FILE"),
                      help="interchange-format model for the real backbones")
    feat.add_argument("--seed", type=int, default=int(_env("SEED", "7")),
                      help="synthetic backbone seed")
    feat.add_argument("--synthetic-k", type=int, default=32)
    feat.add_argument("--synthetic-downscale", type=int, default=4)
    feat.add_argument("--jobs", type=int, default=int(_env("JOBS", "1")))
    feat.add_argument("--force", action="store_true",
                      help="re-extract even if cached files verify")

    tr = sub.add_parser("train", help="train a quality model on a manifest")
    tr.add_argument("--manifest", default=_env("MANIFEST"), required=_env("MANIFEST") is None)
    tr.add_argument("--features-dir", default=_env("FEATURES_DIR"),
                    required=_env("FEATURES_DIR") is None)
    tr.add_argument("--feature-set", default="mcs+rfd", choices=model.FEATURE_SETS)
    tr.add_argument("--k-prime", type=int, default=240)
    tr.add_argument("--out", required=True, help="model file to write")

    pr = sub.add_parser("predict", help="score videos with a trained model")
    pr.add_argument("--model", required=True)
    pr.add_argument("--manifest", default=_env("MANIFEST"), required=_env("MANIFEST") is None)
    pr.add_argument("--features-dir", default=_env("FEATURES_DIR"),
                    required=_env("FEATURES_DIR") is None)
    pr.add_argument("--video", action="append", default=None,
                    help="video id (repeatable); default: all")
    pr.add_argument("--out", default=None, help="optional output table")

    bm = sub.add_parser("benchmark", help="run the repeated-split protocol")
    bm.add_argument("--manifest", default=_env("MANIFEST"), required=_env("MANIFEST") is None)
    bm.add_argument("--features-dir", default=_env("FEATURES_DIR"),
                    required=_env("FEATURES_DIR") is None)
    bm.add_argument("--metric", default="ours",
                    help="comma list: ours plus any of " + ",".join(FR_METRICS))
    bm.add_argument("--reference-manifest", default=None,
                    help="ground-truth videos (same ids) for the FR metrics")
    bm.add_argument("--feature-set", default="mcs+rfd", choices=model.FEATURE_SETS)
    bm.add_argument("--k-prime", type=int, default=240)
    bm.add_argument("--splits", type=int, default=int(_env("SPLITS", "100")))
    bm.add_argument("--train-fraction", type=float, default=0.8)
    bm.add_argument("--seed", type=int, default=_env("SEED"), required=_env("SEED") is None)
    bm.add_argument("--out", required=True,
                    help="output prefix; writes <out>.csv and <out>.json")

    sj = sub.add_parser("subjective", help="raw ratings -> MOS table")
    sj.add_argument("--scores", required=True, help="csv of raw ratings")
    sj.add_argument("--out", required=True, help="MOS csv to write")
    sj.add_argument("--rescale", default="minmax", choices=["minmax", "fixed3"])
    sj.add_argument("--consistency-splits", type=int, default=0,
                    help="if > 0, also print split-half median PLCC")
    sj.add_argument("--seed", type=int, default=int(_env("SEED", "0")))

    dd = sub.add_parser("make-demo-data", help="write a planted synthetic dataset")
    dd.add_argument("--out", required=True)
    dd.add_argument("--n-videos", type=int, default=30)
    dd.add_argument("--seed", type=int, default=int(_env("SEED", "0")))
    dd.add_argument("--size", type=int, default=48)
    dd.add_argument("--n-context", type=int, default=4)
    dd.add_argument("--n-predicted", type=int, default=16)

    return parser


def _make_provider(args):
    if args.backbone == "synthetic":
        return SyntheticProvider(args.seed, args.synthetic_k, args.synthetic_downscale)
    if args.model_file is None:
        raise DataValidationError(
            f"backbone {args.backbone} needs --model-file (interchange format)"
        )
    return OnnxProvider(args.model_file, BACKBONES[args.backbone])


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _extract_one(entry, manifest, provider, out_dir, meta, force):
    record = entry.load(manifest.root)
    source = model.ProviderSource(provider)
    targets = {
        "frames": out_dir / f"{record.id}.frames.pvqf",
        "rfd": out_dir / f"{record.id}.rfd.pvqf",
    }
    if all(p.exists() for p in targets.values()) and not force:
        ok = all(
            read_sidecar(p).get("sha256") == _sha256(p) for p in targets.values()
        )
        if ok:
            return record.id, "cached"
        print(f"warning: {record.id}: cached features fail checksum, re-extracting",
              file=sys.stderr)
    vf = source.video_features(record)
    for kind, maps in {"frames": vf.frame_maps, "rfd": vf.rfd_maps}.items():
        path = targets[kind]
        write_feature_file(maps, path)
        write_sidecar(path, dict(meta, kind=kind, sha256=_sha256(path)))
    return record.id, "extracted"


def cmd_features(args) -> int:
    manifest = load_manifest(args.manifest)
    provider = _make_provider(args)
    out_dir = Path(args.features_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    meta = {
        "backbone": provider.spec.name,
        "tap_point": provider.spec.tap_point,
        "preprocessing": getattr(provider, "PREPROCESSING", "uint8/255, no resize"),
        "exporter_version": EXPORTER_VERSION,
    }
    if args.backbone == "synthetic":
        meta["seed"] = args.seed
        meta["downscale"] = args.synthetic_downscale

    failures = []
    def run(entry):
        try:
            return _extract_one(entry, manifest, provider, out_dir, meta, args.force)
        except Exception as exc:  # per-video error listing, keep going
            failures.append((entry.id, str(exc)))
            return entry.id, "failed"

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(run, manifest.entries))
    else:
        results = [run(e) for e in manifest.entries]

    n_cached = sum(1 for _, s in results if s == "cached")
    n_new = sum(1 for _, s in results if s == "extracted")
    print(f"features: {n_new} extracted, {n_cached} cached, {len(failures)} failed")
    for vid, msg in failures:
        print(f"  {vid}: {msg}", file=sys.stderr)
    return EXIT_VALIDATION if failures else EXIT_OK


def cmd_train(args) -> int:
    manifest = load_manifest(args.manifest)
    records = [manifest.load_video(i) for i in manifest.ids()]
    source = model.PvqfCacheSource(args.features_dir)
    qm = model.train(records, manifest.ids(), source,
                     k_prime=args.k_prime, feature_set=args.feature_set)
    out = Path(args.out)
    try:
        model.save_model(qm, out)
    except Exception:
        out.unlink(missing_ok=True)
        raise
    print(f"model written: {out} (k'={qm.pca.k_prime}, "
          f"feature_set={args.feature_set})")
    return EXIT_OK


def cmd_predict(args) -> int:
    manifest = load_manifest(args.manifest)
    qm = model.load_model(args.model)
    source = model.PvqfCacheSource(args.features_dir)
    ids = args.video or manifest.ids()
    lines = []
    for vid in ids:
        record = manifest.load_video(vid)
        score = model.predict(qm, record, source)
        lines.append(f"{vid}\t{score:.4f}")
        print(lines[-1])
    if args.out:
        Path(args.out).write_text("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    manifest = load_manifest(args.manifest)
    records = [manifest.load_video(i) for i in manifest.ids()]
    source = model.PvqfCacheSource(args.features_dir)
    plan = harness.make_splits(manifest.ids(), seed=args.seed,
                               n_trials=args.splits, fraction=args.train_fraction)

    metrics = [m.strip() for m in args.metric.split(",") if m.strip()]
    trained = []
    untrained = {}
    fr_requested = [m for m in metrics if m in FR_METRICS]
    if fr_requested:
        if args.reference_manifest is None:
            raise DataValidationError(
                f"FR metrics {fr_requested} need --reference-manifest"
            )
        ref_manifest = load_manifest(args.reference_manifest)
        refs = {i: ref_manifest.load_video(i) for i in manifest.ids()}
    for name in metrics:
        if name == "ours":
            trained.append((harness.TrainedModelConfig(
                name="ours", feature_set=args.feature_set, k_prime=args.k_prime),
                source))
        elif name in FR_METRICS:
            needs_provider = FR_METRICS[name][2]
            provider = None
            if needs_provider:
                raise DataValidationError(
                    f"{name} needs a live provider; use the library API"
                )
            scores = {}
            for r in records:
                scores[r.id] = fr_video_score(name, r, refs[r.id], provider).aggregate
            untrained[name] = scores
        else:
            raise DataValidationError(f"unknown metric {name!r}")

    report = harness.benchmark(records, plan, trained=trained, untrained=untrained)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    harness.write_report_csv(report, out.with_suffix(".csv"))
    harness.write_report_json(report, out.with_suffix(".json"))
    for row in harness.report_rows(report):
        print(f"{row['metric']:>24s}  srocc {row['srocc_median']:.4f}"
              f" +/- {row['srocc_std']:.2f}  plcc {row['plcc_median']:.4f}"
              f" +/- {row['plcc_std']:.2f}  rmse {row['rmse_median']:.4f}")
    return EXIT_OK


def cmd_subjective(args) -> int:
    table = subjective.load_scores_csv(args.scores)
    z = subjective.zscore(table)
    inliers, outliers = subjective.reject_outliers(z)
    mos = subjective.compute_mos(z, outlier_subjects=outliers, mode=args.rescale)
    subjective.save_mos_csv(mos, args.out)
    print(f"MOS written: {args.out} ({len(mos.rows)} videos, "
          f"{len(inliers)} inlier / {len(outliers)} outlier subjects)")
    if args.consistency_splits > 0:
        z_inliers = z.without_subjects(outliers)
        value = subjective.split_half_consistency(
            z_inliers, n_splits=args.consistency_splits, seed=args.seed
        )
        print(f"split-half median PLCC over {args.consistency_splits} splits: "
              f"{value:.4f}")
    return EXIT_OK


def cmd_make_demo_data(args) -> int:
    manifest_path = synthetic.write_planted_dataset(
        args.out, n_videos=args.n_videos, seed=args.seed, size=args.size,
        n_context=args.n_context, n_predicted=args.n_predicted,
    )
    print(f"demo dataset written: {manifest_path}")
    return EXIT_OK


COMMANDS = {
    "features": cmd_features,
    "train": cmd_train,
    "predict": cmd_predict,
    "benchmark": cmd_benchmark,
    "subjective": cmd_subjective,
    "make-demo-data": cmd_make_demo_data,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except SystemExit:
        raise
    except (DataValidationError, FormatError, ProviderUnavailableError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
