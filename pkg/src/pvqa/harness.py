"""Benchmark protocol: repeated 80:20 splits, per-split training or logistic
fitting, median SROCC/PLCC/RMSE with spreads, and the ablation sweeps.

Trials are driven by per-trial derived seeds (seed + trial index), so a plan
is fully determined by (ids, seed, n_trials, fraction) and identical runs
produce bit-identical reports.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .core import DataValidationError, VideoRecord
from .model import FeatureConfig, _as_source, assemble_features, fit_from_features
from .providers import BackboneSpec
from .stats import fit_logistic, pca_transform, plcc, rmse, srocc


@dataclass(frozen=True)
class SplitPlan:
    seed: int
    n_trials: int
    train_fraction: float
    trials: tuple[tuple[tuple[str, ...], tuple[str, ...]], ...]


def make_splits(
    ids: Sequence[str], seed: int, n_trials: int = 100, fraction: float = 0.8
) -> SplitPlan:
    """Seeded random train/test splits; trial t uses seed + t."""
    ids = list(ids)
    if len(ids) < 5:
        raise DataValidationError(f"need at least 5 ids, got {len(ids)}")
    if not 0.0 < fraction < 1.0:
        raise DataValidationError("fraction must be in (0, 1)")
    n_train = math.ceil(fraction * len(ids))
    if n_train >= len(ids):
        raise DataValidationError("fraction leaves an empty test set")
    trials = []
    for t in range(n_trials):
        rng = np.random.default_rng(seed + t)
        perm = [ids[i] for i in rng.permutation(len(ids))]
        trials.append((tuple(perm[:n_train]), tuple(perm[n_train:])))
    return SplitPlan(seed=seed, n_trials=n_trials, train_fraction=fraction,
                     trials=tuple(trials))


@dataclass(frozen=True)
class MetricSummary:
    """Median and spread of SROCC/PLCC/RMSE across trials (raw values kept)."""

    name: str
    srocc_median: float
    srocc_std: float
    plcc_median: float
    plcc_std: float
    rmse_median: float
    rmse_std: float
    n_trials: int
    n_undefined: int
    per_trial_srocc: tuple[float, ...] = field(repr=False, default=())
    per_trial_plcc: tuple[float, ...] = field(repr=False, default=())
    per_trial_rmse: tuple[float, ...] = field(repr=False, default=())


def _summarize(name: str, sroccs, plccs, rmses) -> MetricSummary:
    sroccs = np.asarray(sroccs, dtype=np.float64)
    plccs = np.asarray(plccs, dtype=np.float64)
    rmses = np.asarray(rmses, dtype=np.float64)
    defined = ~(np.isnan(sroccs) | np.isnan(plccs))
    n_undefined = int(np.sum(~defined))

    def med(v):
        return float(np.median(v[defined])) if defined.any() else float("nan")

    def std(v):
        return float(np.std(v[defined])) if defined.any() else float("nan")

    return MetricSummary(
        name=name,
        srocc_median=med(sroccs), srocc_std=std(sroccs),
        plcc_median=med(plccs), plcc_std=std(plccs),
        rmse_median=med(rmses), rmse_std=std(rmses),
        n_trials=sroccs.size, n_undefined=n_undefined,
        per_trial_srocc=tuple(sroccs), per_trial_plcc=tuple(plccs),
        per_trial_rmse=tuple(rmses),
    )


@dataclass(frozen=True)
class BenchmarkReport:
    plan_seed: int
    n_trials: int
    train_fraction: float
    metrics: tuple[MetricSummary, ...]

    def metric(self, name: str) -> MetricSummary:
        for m in self.metrics:
            if m.name == name:
                return m
        raise KeyError(name)


@dataclass(frozen=True)
class TrainedModelConfig:
    name: str = "ours"
    feature_set: str = "mcs+rfd"
    k_prime: int = 240


def _mos_map(records: Sequence[VideoRecord]) -> dict[str, float]:
    missing = [r.id for r in records if r.mos is None]
    if missing:
        raise DataValidationError(f"records without MOS: {missing[:5]}")
    return {r.id: float(r.mos) for r in records}


def feature_matrix(
    records: Sequence[VideoRecord], provider_or_source, feature_set: str
) -> dict[str, np.ndarray]:
    """Assemble each video's feature vector once; trials reuse the cache."""
    source = _as_source(provider_or_source)
    return {r.id: assemble_features(r, source, feature_set) for r in records}


def evaluate_trained(
    config: TrainedModelConfig,
    records: Sequence[VideoRecord],
    provider_or_source,
    plan: SplitPlan,
    features: Mapping[str, np.ndarray] | None = None,
) -> MetricSummary:
    """Train per trial on the train split, score the test split."""
    mos = _mos_map(records)
    if features is None:
        features = feature_matrix(records, provider_or_source, config.feature_set)
    first = records[0]
    fc = FeatureConfig(first.n_context, first.n_predicted, config.feature_set)
    backbone = BackboneSpec("unknown", "unknown", k=1)

    sroccs, plccs, rmses = [], [], []
    for train_ids, test_ids in plan.trials:
        assert not set(train_ids) & set(test_ids)
        x_train = np.stack([features[i] for i in train_ids]).astype(np.float64)
        y_train = np.array([mos[i] for i in train_ids])
        qm = fit_from_features(x_train, y_train, config.k_prime, backbone, fc)
        x_test = np.stack([features[i] for i in test_ids]).astype(np.float64)
        preds = qm.reg.predict(pca_transform(qm.pca, x_test))
        y_test = np.array([mos[i] for i in test_ids])
        sroccs.append(srocc(preds, y_test))
        plccs.append(plcc(preds, y_test))
        rmses.append(rmse(preds, y_test))
    return _summarize(config.name, sroccs, plccs, rmses)


def evaluate_untrained(
    name: str,
    scores: Mapping[str, float],
    records: Sequence[VideoRecord],
    plan: SplitPlan,
) -> MetricSummary:
    """Fit the logistic map on each trial's train split, score its test split.

    SROCC is computed on the raw test scores; PLCC and RMSE go through the
    fitted monotone map.  Degenerate trials (constant scores) are recorded as
    undefined and excluded from the medians.
    """
    mos = _mos_map(records)
    missing = [r.id for r in records if r.id not in scores]
    if missing:
        raise DataValidationError(f"missing metric scores for {missing[:5]}")

    sroccs, plccs, rmses = [], [], []
    for train_ids, test_ids in plan.trials:
        s_train = np.array([scores[i] for i in train_ids])
        m_train = np.array([mos[i] for i in train_ids])
        s_test = np.array([scores[i] for i in test_ids])
        m_test = np.array([mos[i] for i in test_ids])
        if np.all(s_train == s_train[0]) or np.all(s_test == s_test[0]):
            sroccs.append(float("nan"))
            plccs.append(float("nan"))
            rmses.append(float("nan"))
            continue
        mapping = fit_logistic(s_train, m_train)
        mapped = mapping(s_test)
        sroccs.append(srocc(s_test, m_test))
        plccs.append(plcc(mapped, m_test))
        rmses.append(rmse(mapped, m_test))
    return _summarize(name, sroccs, plccs, rmses)


def benchmark(
    records: Sequence[VideoRecord],
    plan: SplitPlan,
    trained: Sequence[tuple[TrainedModelConfig, object]] = (),
    untrained: Mapping[str, Mapping[str, float]] | None = None,
) -> BenchmarkReport:
    """Evaluate trained configs (with their sources) and untrained score maps."""
    summaries = []
    for config, source in trained:
        summaries.append(evaluate_trained(config, records, source, plan))
    for name, scores in (untrained or {}).items():
        summaries.append(evaluate_untrained(name, scores, records, plan))
    return BenchmarkReport(
        plan_seed=plan.seed,
        n_trials=plan.n_trials,
        train_fraction=plan.train_fraction,
        metrics=tuple(summaries),
    )


def sweep_training_size(
    config: TrainedModelConfig,
    records: Sequence[VideoRecord],
    provider_or_source,
    plan: SplitPlan,
    fractions: Sequence[float] = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8),
) -> list[tuple[float, MetricSummary]]:
    """Nested training subsets per trial, fixed test set, K' = subset size."""
    mos = _mos_map(records)
    features = feature_matrix(records, provider_or_source, config.feature_set)
    n_total = len(records)
    first = records[0]
    fc = FeatureConfig(first.n_context, first.n_predicted, config.feature_set)
    backbone = BackboneSpec("unknown", "unknown", k=1)

    series = []
    for fraction in fractions:
        size = int(round(fraction * n_total))
        sroccs, plccs, rmses = [], [], []
        for train_ids, test_ids in plan.trials:
            subset = train_ids[: min(size, len(train_ids))]
            x_train = np.stack([features[i] for i in subset]).astype(np.float64)
            y_train = np.array([mos[i] for i in subset])
            qm = fit_from_features(x_train, y_train, len(subset), backbone, fc)
            x_test = np.stack([features[i] for i in test_ids]).astype(np.float64)
            preds = qm.reg.predict(pca_transform(qm.pca, x_test))
            y_test = np.array([mos[i] for i in test_ids])
            sroccs.append(srocc(preds, y_test))
            plccs.append(plcc(preds, y_test))
            rmses.append(rmse(preds, y_test))
        label = f"{config.name}@{int(round(fraction * 100))}%"
        series.append((fraction, _summarize(label, sroccs, plccs, rmses)))
    return series


def sweep_k_prime(
    config: TrainedModelConfig,
    records: Sequence[VideoRecord],
    provider_or_source,
    plan: SplitPlan,
    values: Sequence[int] = (40, 80, 120, 160, 200, 240),
) -> list[tuple[int, MetricSummary]]:
    """Re-run the protocol with different principal-component counts."""
    features = feature_matrix(records, provider_or_source, config.feature_set)
    series = []
    for k in values:
        cfg = TrainedModelConfig(name=f"{config.name}@k{k}",
                                 feature_set=config.feature_set, k_prime=k)
        series.append(
            (k, evaluate_trained(cfg, records, provider_or_source, plan,
                                 features=features))
        )
    return series


@dataclass(frozen=True)
class ScatterRow:
    trial: int
    video_id: str
    mcs_error: float
    rfd_error: float


def error_scatter(
    records: Sequence[VideoRecord],
    provider_or_source,
    plan: SplitPlan,
    k_prime: int = 240,
    n_dump_trials: int = 10,
    threshold: float = 15.0,
) -> tuple[list[ScatterRow], dict[str, int]]:
    """Absolute test-set prediction errors of MCS-only vs RFD-only models.

    Returns per-video rows plus quadrant counts around ``threshold`` (both
    low, mcs-only high, rfd-only high, both high).
    """
    mos = _mos_map(records)
    feats = {
        fs: feature_matrix(records, provider_or_source, fs) for fs in ("mcs", "rfd")
    }
    first = records[0]
    backbone = BackboneSpec("unknown", "unknown", k=1)

    rows = []
    for t, (train_ids, test_ids) in enumerate(plan.trials[:n_dump_trials]):
        errors = {}
        for fs in ("mcs", "rfd"):
            fc = FeatureConfig(first.n_context, first.n_predicted, fs)
            x_train = np.stack([feats[fs][i] for i in train_ids]).astype(np.float64)
            y_train = np.array([mos[i] for i in train_ids])
            qm = fit_from_features(x_train, y_train, k_prime, backbone, fc)
            x_test = np.stack([feats[fs][i] for i in test_ids]).astype(np.float64)
            preds = qm.reg.predict(pca_transform(qm.pca, x_test))
            errors[fs] = np.abs(preds - np.array([mos[i] for i in test_ids]))
        for j, vid in enumerate(test_ids):
            rows.append(ScatterRow(trial=t, video_id=vid,
                                   mcs_error=float(errors["mcs"][j]),
                                   rfd_error=float(errors["rfd"][j])))

    quadrants = {"both_low": 0, "mcs_high_only": 0, "rfd_high_only": 0, "both_high": 0}
    for row in rows:
        mcs_high = row.mcs_error > threshold
        rfd_high = row.rfd_error > threshold
        if mcs_high and rfd_high:
            quadrants["both_high"] += 1
        elif mcs_high:
            quadrants["mcs_high_only"] += 1
        elif rfd_high:
            quadrants["rfd_high_only"] += 1
        else:
            quadrants["both_low"] += 1
    return rows, quadrants


def report_rows(report: BenchmarkReport, magnitude: bool = True) -> list[dict]:
    """Tabular view of a report; SROCC/PLCC as magnitudes by default."""
    rows = []
    for m in report.metrics:
        srocc_v, plcc_v = m.srocc_median, m.plcc_median
        if magnitude:
            srocc_v, plcc_v = abs(srocc_v), abs(plcc_v)
        rows.append({
            "metric": m.name,
            "srocc_median": srocc_v,
            "srocc_std": m.srocc_std,
            "plcc_median": plcc_v,
            "plcc_std": m.plcc_std,
            "rmse_median": m.rmse_median,
            "rmse_std": m.rmse_std,
            "n_trials": m.n_trials,
            "n_undefined": m.n_undefined,
        })
    return rows


def write_report_csv(report: BenchmarkReport, path: Path | str,
                     magnitude: bool = True) -> None:
    rows = report_rows(report, magnitude=magnitude)
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)


def _jsonable(v):
    if isinstance(v, float) and math.isnan(v):
        return None
    return v


def write_report_json(report: BenchmarkReport, path: Path | str,
                      magnitude: bool = True) -> None:
    payload = {
        "plan": {
            "seed": report.plan_seed,
            "n_trials": report.n_trials,
            "train_fraction": report.train_fraction,
        },
        "metrics": [
            {k: _jsonable(v) for k, v in row.items()}
            for row in report_rows(report, magnitude=magnitude)
        ],
        "per_trial": {
            m.name: {
                "srocc": [_jsonable(v) for v in m.per_trial_srocc],
                "plcc": [_jsonable(v) for v in m.per_trial_plcc],
                "rmse": [_jsonable(v) for v in m.per_trial_rmse],
            }
            for m in report.metrics
        },
    }
    Path(path).write_text(json.dumps(payload, indent=1) + "\n")
