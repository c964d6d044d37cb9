from .consistency import (
    AnomalyInterval,
    consistency_of_labels,
    consistency_score_anomaly,
    consistency_score_model,
    extract_intervals,
    runs,
)
from .cv import (
    CVReport,
    EvalConfig,
    Fold,
    SplitResult,
    auto_labels,
    evaluate_split,
    fold_plan,
    fold_seed,
    plan_matrix,
    run_cv,
    split_segments,
)
from .labels import (
    SignalThreshold,
    default_thresholds,
    label_timestamps,
    label_windows,
    read_thresholds,
    resolve_bounds,
    smooth_labels,
    statistical,
    write_thresholds,
)
from .metrics import (
    ConfusionMetrics,
    RocPoint,
    confusion_counts,
    confusion_metrics,
    pool_roc,
    roc_curve,
    write_roc_csv,
)
