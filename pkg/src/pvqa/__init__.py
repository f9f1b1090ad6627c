"""Perceptual quality assessment of machine-predicted videos.

Feature pipeline (motion-compensated cosine similarities + rescaled frame
difference features, PCA, linear regression), full-reference baselines,
subjective score processing, and the repeated-split benchmark harness.
"""

from .core import (
    DataValidationError,
    DatasetManifest,
    FeatureMap,
    FormatError,
    NumericalError,
    ProviderUnavailableError,
    PvqaError,
    VideoEntry,
    VideoRecord,
    load_frame,
    load_manifest,
    read_feature_file,
    save_frame,
    save_manifest,
    write_feature_file,
)
from .providers import (
    BACKBONES,
    BackboneSpec,
    FileFeatureProvider,
    OnnxProvider,
    SyntheticProvider,
    ssa,
    synthetic_provider,
)
from .mcs import (
    McsFeatureVector,
    MotionField,
    cosine_similarity,
    mcs_frame_features,
    mcs_video_features,
    motion_compensate,
)
from .rfd import (
    RfdFeatureVector,
    rescaled_frame_difference,
    rfd_dissimilarity,
    rfd_images,
    rfd_video_features,
)
from .stats import (
    LinearModel,
    LogisticFit,
    PcaModel,
    distance_correlation,
    fit_logistic,
    linreg_fit,
    pca_fit,
    pca_transform,
    plcc,
    rmse,
    srocc,
    welch_t_test,
)
from .model import (
    FeatureAssembly,
    FeatureConfig,
    ProviderSource,
    PvqfCacheSource,
    QualityModel,
    assemble_features,
    assemble_mcs_rfd,
    load_model,
    predict,
    save_model,
    train,
)
from .subjective import (
    MosTable,
    Rating,
    SubjectScoreTable,
    ZScoreTable,
    compute_mos,
    process_scores,
    reject_outliers,
    split_half_consistency,
    zscore,
)
from .baselines import (
    FR_METRICS,
    FrScore,
    feature_cosine,
    feature_mse,
    fr_video_score,
    frame_mse,
    frame_msssim,
    frame_ssim,
    gradient_difference,
)
from .harness import (
    BenchmarkReport,
    MetricSummary,
    SplitPlan,
    TrainedModelConfig,
    benchmark,
    error_scatter,
    evaluate_trained,
    evaluate_untrained,
    make_splits,
    sweep_k_prime,
    sweep_training_size,
)

__version__ = "0.1.0"
