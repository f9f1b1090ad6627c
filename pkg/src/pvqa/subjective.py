"""Subjective score processing: Z-scores, BT.500 subject screening, MOS.

Raw ratings are standardized per subject and session, inconsistent subjects
are screened out with the BT.500-style excursion-counting rule, and the
surviving z-scores are rescaled to [0, 100] and averaged per video.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import DataValidationError, NumericalError
from .stats import plcc


@dataclass(frozen=True)
class Rating:
    subject: str
    session: int
    video: str
    score: float


def _check_unique(ratings):
    seen = set()
    for r in ratings:
        key = (r.subject, r.session, r.video)
        if key in seen:
            raise DataValidationError(f"duplicate rating {key}")
        seen.add(key)
        if r.session not in (1, 2):
            raise DataValidationError(f"session must be 1 or 2, got {r.session}")


@dataclass(frozen=True)
class SubjectScoreTable:
    """Raw per-subject per-session ratings on the [0, 100] scale."""

    ratings: tuple[Rating, ...]

    def __post_init__(self):
        _check_unique(self.ratings)
        for r in self.ratings:
            if not 0.0 <= r.score <= 100.0:
                raise DataValidationError(
                    f"raw score {r.score} outside [0, 100] "
                    f"({r.subject}, s{r.session}, {r.video})"
                )

    def subjects(self) -> list[str]:
        return sorted({r.subject for r in self.ratings})

    def videos(self) -> list[str]:
        return sorted({r.video for r in self.ratings})


@dataclass(frozen=True)
class ZScoreTable:
    """Standardized ratings; ``degenerate`` lists skipped (subject, session)
    groups that had fewer than two ratings or zero variance."""

    ratings: tuple[Rating, ...]
    degenerate: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        _check_unique(self.ratings)

    def subjects(self) -> list[str]:
        return sorted({r.subject for r in self.ratings})

    def videos(self) -> list[str]:
        return sorted({r.video for r in self.ratings})

    def without_subjects(self, excluded) -> "ZScoreTable":
        excluded = set(excluded)
        return ZScoreTable(
            ratings=tuple(r for r in self.ratings if r.subject not in excluded),
            degenerate=self.degenerate,
        )


def zscore(table: SubjectScoreTable, ddof: int = 0) -> ZScoreTable:
    """Standardize scores within each (subject, session) group.

    The default population denominator (ddof=0) keeps a two-rating group at
    z = +/-1; pass ddof=1 for the sample convention.
    """
    groups: dict[tuple[str, int], list[Rating]] = defaultdict(list)
    for r in table.ratings:
        groups[(r.subject, r.session)].append(r)

    out = []
    degenerate = []
    for key in sorted(groups):
        rows = groups[key]
        scores = np.array([r.score for r in rows], dtype=np.float64)
        std = scores.std(ddof=ddof) if scores.size > ddof else 0.0
        if scores.size < 2 or std == 0.0:
            degenerate.append(key)
            continue
        mean = scores.mean()
        for r, s in zip(rows, scores):
            out.append(Rating(r.subject, r.session, r.video, (s - mean) / std))
    return ZScoreTable(ratings=tuple(out), degenerate=tuple(degenerate))


def reject_outliers(z_table: ZScoreTable) -> tuple[list[str], list[str]]:
    """BT.500-style screening: (inlier subjects, outlier subjects).

    Per video the mean, standard deviation, and kurtosis of the z-scores are
    computed; excursions beyond mean +/- c*std (c = 2 for kurtosis in [2, 4],
    else sqrt(20)) are counted per subject as P above and Q below, and a
    subject is rejected when (P+Q)/n > 0.05 and |P-Q|/(P+Q) < 0.3.
    Comparisons are strict, so exact agreement rejects nobody.
    """
    subjects = z_table.subjects()
    if len(subjects) < 2:
        raise DataValidationError("screening needs at least 2 subjects")

    per_video: dict[str, list[Rating]] = defaultdict(list)
    for r in z_table.ratings:
        per_video[r.video].append(r)

    bounds = {}
    for video, rows in per_video.items():
        z = np.array([r.score for r in rows], dtype=np.float64)
        mean = z.mean()
        std = z.std(ddof=1) if z.size >= 2 else 0.0
        m2 = np.mean((z - mean) ** 2)
        kurtosis = np.mean((z - mean) ** 4) / m2 ** 2 if m2 > 0 else 0.0
        c = 2.0 if 2.0 <= kurtosis <= 4.0 else np.sqrt(20.0)
        bounds[video] = (mean - c * std, mean + c * std)

    counts = {s: [0, 0, 0] for s in subjects}  # P, Q, total
    for r in z_table.ratings:
        lo, hi = bounds[r.video]
        p, q, total = counts[r.subject]
        counts[r.subject] = [p + (r.score > hi), q + (r.score < lo), total + 1]

    inliers, outliers = [], []
    for s in subjects:
        p, q, total = counts[s]
        rejected = (p + q) / total > 0.05 and \
            (p + q) > 0 and abs(p - q) / (p + q) < 0.3
        (outliers if rejected else inliers).append(s)
    return inliers, outliers


@dataclass(frozen=True)
class MosRow:
    video: str
    mos: float
    count: int
    std: float


@dataclass(frozen=True)
class MosTable:
    rows: tuple[MosRow, ...]
    inlier_subjects: tuple[str, ...] = ()
    outlier_subjects: tuple[str, ...] = ()

    def mos(self, video: str) -> float:
        for row in self.rows:
            if row.video == video:
                return row.mos
        raise KeyError(video)

    def as_dict(self) -> dict[str, float]:
        return {row.video: row.mos for row in self.rows}


def compute_mos(
    z_table: ZScoreTable,
    outlier_subjects=(),
    mode: str = "minmax",
) -> MosTable:
    """Rescale inlier z-scores to [0, 100] and average per video.

    ``mode="minmax"`` (default) maps the global minimum to 0 and maximum to
    100; ``mode="fixed3"`` uses the (z+3)*100/6 convention instead, clipped
    to [0, 100].
    """
    table = z_table.without_subjects(outlier_subjects)
    if not table.ratings:
        raise DataValidationError("no inlier ratings")
    z = np.array([r.score for r in table.ratings], dtype=np.float64)
    if mode == "minmax":
        lo, hi = z.min(), z.max()
        if hi == lo:
            raise NumericalError("degenerate z-score range; cannot rescale")
        rescaled = (z - lo) * 100.0 / (hi - lo)
    elif mode == "fixed3":
        rescaled = np.clip((z + 3.0) * 100.0 / 6.0, 0.0, 100.0)
    else:
        raise DataValidationError(f"unknown rescale mode {mode!r}")

    per_video: dict[str, list[float]] = defaultdict(list)
    for r, v in zip(table.ratings, rescaled):
        per_video[r.video].append(float(v))

    rows = []
    for video in sorted(per_video):
        vals = np.asarray(per_video[video])
        std = float(vals.std(ddof=1)) if vals.size >= 2 else 0.0
        rows.append(MosRow(video=video, mos=float(vals.mean()),
                           count=vals.size, std=std))
    return MosTable(
        rows=tuple(rows),
        inlier_subjects=tuple(table.subjects()),
        outlier_subjects=tuple(sorted(outlier_subjects)),
    )


def process_scores(table: SubjectScoreTable, mode: str = "minmax") -> MosTable:
    """Full pipeline: z-score, screen outliers, rescale, average per video."""
    z = zscore(table)
    _, outliers = reject_outliers(z)
    return compute_mos(z, outlier_subjects=outliers, mode=mode)


def split_half_consistency(z_table: ZScoreTable, n_splits: int, seed: int) -> float:
    """Median PLCC of per-video MOS over random halvings of the subjects."""
    subjects = z_table.subjects()
    if len(subjects) < 4:
        raise DataValidationError("need at least 4 subjects to split")
    per_subject_video: dict[str, dict[str, list[float]]] = defaultdict(lambda: defaultdict(list))
    for r in z_table.ratings:
        per_subject_video[r.subject][r.video].append(r.score)

    values = []
    for t in range(n_splits):
        rng = np.random.default_rng(seed + t)
        perm = [subjects[i] for i in rng.permutation(len(subjects))]
        half_a = set(perm[: len(subjects) // 2])
        mos_a = _half_mos(per_subject_video, half_a)
        mos_b = _half_mos(per_subject_video, set(perm) - half_a)
        common = sorted(set(mos_a) & set(mos_b))
        if len(common) < 2:
            continue
        values.append(plcc([mos_a[v] for v in common], [mos_b[v] for v in common]))
    if not values:
        raise NumericalError("no valid splits")
    return float(np.nanmedian(values))


def _half_mos(per_subject_video, half) -> dict[str, float]:
    acc: dict[str, list[float]] = defaultdict(list)
    for subject in half:
        for video, scores in per_subject_video[subject].items():
            acc[video].extend(scores)
    return {v: float(np.mean(s)) for v, s in acc.items()}


def load_scores_csv(path: Path | str) -> SubjectScoreTable:
    """Read a delimited table with header subject_id, session, video_id, score."""
    path = Path(path)
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        required = {"subject_id", "session", "video_id", "score"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise DataValidationError(
                f"{path}: expected header with columns {sorted(required)}"
            )
        ratings = tuple(
            Rating(
                subject=row["subject_id"],
                session=int(row["session"]),
                video=row["video_id"],
                score=float(row["score"]),
            )
            for row in reader
        )
    return SubjectScoreTable(ratings=ratings)


def save_mos_csv(table: MosTable, path: Path | str) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["video_id", "mos", "count", "std"])
        for row in table.rows:
            writer.writerow([row.video, f"{row.mos:.6f}", row.count, f"{row.std:.6f}"])
