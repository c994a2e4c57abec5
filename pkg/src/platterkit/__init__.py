"""Toolkit for dish-detection pipelines: YOLO-format dataset handling,
detector evaluation (P/R/F1, AP, mAP at IoU 0.5, curves, confusion
matrices), multi-label classification metrics, and the companion diet loop
(calorie goals, meal logging, color-graded daily tracker) behind a CLI and
an HTTP service."""

from .dataset import (
    BoundingBox,
    ClassRegistry,
    Dataset,
    DatasetStats,
    GroundTruthBox,
    ImageRecord,
    compute_stats,
    parse_class_list,
    parse_yolo_label_file,
    serialize_yolo_label,
    split_dataset,
    stats_from_counts,
)
from .detections import (
    DetectionSet,
    DetectorConfig,
    detections_to_counts,
    parse_detection_file,
    serialize_detection_file,
    stub_detect,
)
from .metrics import (
    ClassReport,
    ConfusionMatrix,
    Curve,
    LabelProbabilities,
    MatchOutcome,
    MetricsReport,
    PredictedBox,
    PRF,
    SweepReport,
    average_precision,
    classification_metrics,
    confidence_sweep,
    confusion_matrix,
    evaluate_detections,
    iou,
    match_dataset,
    match_detections,
    mean_average_precision,
    precision_recall_f1,
)
from .nutrition import (
    ACTIVITY_MULTIPLIERS,
    BMR_VARIANTS,
    CalorieGoal,
    CalorieTable,
    DayEntry,
    DietJournal,
    DishEntry,
    MealLog,
    TrackerState,
    UserProfile,
    band_for_fraction,
    compute_bmr,
    compute_goal,
    estimate_meal_calories,
)

__version__ = "0.1.0"
